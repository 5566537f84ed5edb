// Command-line driver for the thin-gap experiments.
//
//   thingap <subcommand> [--config FILE] [--out DIR] [--set key=value]... [--seed N] [--threads N]
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 on a
// configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "thingap/thingap.hpp"

namespace {

using namespace thingap;

struct Outcome {
  Json result;
  bool pass = false;
};

template <int N>
Outcome geometry_checks(const Config& c) {
  const ProfileSpec spec = make_profile(c);
  const double eps = c.number("epsilon"), gamma = c.number("gamma");
  const GapGeometry<N> g = spec.kind == "flat" ? GapGeometry<N>::flat(eps, gamma)
                                               : GapGeometry<N>::power(eps, gamma, spec.c1, spec.c2);
  const auto inv = check_invariants(g, std::size_t(c.integer("samples.geometry")));
  Outcome o;
  o.pass = inv.ok(g.kappa0(), g.kappa1());
  o.result = Json{{"dim", N},
                  {"epsilon", num(eps)},
                  {"gamma", num(gamma)},
                  {"kappa0", num(g.kappa0())},
                  {"kappa1", num(g.kappa1())},
                  {"kappa2", num(g.kappa2())},
                  {"h_at_zero", num(inv.h_at_zero)},
                  {"grad_at_zero", num(inv.grad_at_zero)},
                  {"measured_kappa0", num(inv.measured_kappa0)},
                  {"measured_kappa1", num(inv.measured_kappa1)},
                  {"min_gap", num(inv.min_gap)},
                  {"min_delta_over_eps", num(inv.min_delta_over_eps)},
                  {"profile_fd_error", num(inv.profile_fd_error)},
                  {"inner_ratio_max", num(inv.inner_ratio_max)},
                  {"outer_ratio_min", num(inv.outer_ratio_min)},
                  {"outer_ratio_max", num(inv.outer_ratio_max)},
                  {"samples", inv.samples}};
  if (N == 2 && c.str("profile.kind") != "custom") {
    const SweepPlan plan = make_sweep_plan(c);
    const Mesh mesh = generate(plan.profile.make(eps, gamma), plan.mesh);
    const MeshReport mr = validate(mesh);
    o.result["mesh"] = Json{{"vertices", mesh.vertices.size()},
                            {"triangles", mesh.triangles.size()},
                            {"min_area", num(mr.min_area)},
                            {"boundary_error", num(mr.boundary_error)},
                            {"conforming", mr.conforming},
                            {"quality", num(mr.quality)},
                            {"area_rel_error", num(mr.area_rel_error)},
                            {"pass", mr.ok()}};
    o.pass = o.pass && mr.ok();
  }
  o.result["pass"] = o.pass;
  return o;
}

Outcome validate_geometry(const Config& c) {
  switch (config_dim(c)) {
    case 2: return geometry_checks<2>(c);
    case 3: return geometry_checks<3>(c);
    default: throw ConfigError("validate-geometry supports dim = 2 or 3");
  }
}

template <int N>
Outcome coefficient_checks(const Config& c) {
  const ProfileSpec spec = make_profile(c);
  const double eps = c.number("epsilon"), gamma = c.number("gamma");
  const GapGeometry<N> g = spec.kind == "flat" ? GapGeometry<N>::flat(eps, gamma)
                                               : GapGeometry<N>::power(eps, gamma, spec.c1, spec.c2);
  const CoefficientSet cs = make_coefficients(c, N);
  Outcome o;
  Json j{{"dim", N}, {"kind", cs.kind}, {"m", cs.m}, {"lambda", num(cs.lambda)}, {"Lambda", num(cs.Lambda)}};
  try {
    const auto e = check_ellipticity(cs, g, std::size_t(c.integer("samples.ellipticity")));
    j["ellipticity"] = Json{{"measured", num(e.measured)},
                            {"claimed", num(cs.lambda)},
                            {"near_degenerate", e.near_degenerate},
                            {"samples", e.samples},
                            {"meets_claim", e.meets_claim}};
    o.pass = e.meets_claim;
  } catch (const EllipticityViolation& ex) {
    j["ellipticity"] = Json{{"error", ex.what()}, {"meets_claim", false}};
    o.pass = false;
  }
  const auto h = check_holder(cs, g, std::size_t(c.integer("samples.holder")), std::uint64_t(c.integer("seed")));
  j["holder"] = Json{{"norm_A", num(h.norm_A)},
                     {"norm_B", num(h.norm_B)},
                     {"norm_C", num(h.norm_C)},
                     {"norm_D", num(h.norm_D)},
                     {"kappa3", num(h.kappa3)},
                     {"pairs", h.pairs}};
  j["pass"] = o.pass;
  o.result = j;
  return o;
}

Outcome validate_coefficients(const Config& c) {
  switch (config_dim(c)) {
    case 2: return coefficient_checks<2>(c);
    case 3: return coefficient_checks<3>(c);
    default: throw ConfigError("validate-coefficients supports dim = 2 or 3");
  }
}

Outcome solve(const Config& c, const std::filesystem::path& out) {
  const SweepPlan plan = make_sweep_plan(c);
  const double eps = c.number("epsilon");
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  const EpsilonRecord rec = measure_epsilon(plan, eps);

  const GapGeometry<2> g = plan.profile.make(eps, plan.gamma);
  auto mesh = std::make_shared<const Mesh>(generate(g, plan.mesh));
  const DiscreteSolution u =
      GapProblem(mesh, plan.coefficients, plan.data, plan.lateral, AssemblyOptions{plan.quadrature, plan.threads})
          .solve_full();
  std::ofstream ms(out / "mesh.txt"), us(out / "solution.txt"), ps(out / "gradient_probes.csv");
  if (!ms || !us || !ps) throw IoError("cannot write solution files under '" + out.string() + "'");
  write_mesh(ms, *mesh);
  write_solution(us, u);
  auto probes = centerline_probes(g, plan.centerline_samples);
  for (const auto& p : midline_probes(g, plan.midline_samples, plan.midline_half_width)) probes.push_back(p);
  write_gradient_probes(ps, u, probes);

  Outcome o;
  o.pass = rec.superposition_error <= 10 * solver_tolerance && std::isfinite(rec.m_center) &&
           (!plan.reliability_gate || rec.reliable);
  o.result = to_json(rec);
  o.result["pass"] = o.pass;
  return o;
}

Outcome sweep(const Config& c, const std::filesystem::path& out) {
  const SweepPlan plan = make_sweep_plan(c);
  const BlowupReport r = run_sweep(plan);
  emit_tables(r, out);
  Outcome o;
  o.result = to_json(r);
  o.pass = judge_sweep(r).pass;
  return o;
}

Outcome prop21(const Config& c) {
  const SweepPlan plan = make_sweep_plan(c);
  const Prop21Sweep p = run_prop21(plan, make_prop21_settings(c));
  const auto ids = check_auxiliary_identities(plan.profile.make(c.number("epsilon"), plan.gamma), plan.data,
                                              std::size_t(c.integer("samples.auxiliary")));
  Outcome o;
  o.result = to_json(p);
  o.result["auxiliary_identities"] = Json{{"normal_derivative_error", num(ids.normal_derivative_error)},
                                          {"gradient_fd_error", num(ids.gradient_fd_error)},
                                          {"samples", ids.samples},
                                          {"pass", ids.pass()}};
  o.pass = p.pass && ids.pass();
  o.result["pass"] = o.pass;
  return o;
}

Outcome energy(const Config& c, const std::filesystem::path& out) {
  const SweepPlan plan = make_sweep_plan(c);
  const EnergyReport e = check_energy_scaling(plan, make_energy_plan(c, plan));
  std::vector<std::pair<double, double>> inner, outer;
  for (const auto& r : e.inner) inner.emplace_back(r.scale, r.energy);
  for (const auto& r : e.outer) outer.emplace_back(r.scale, r.energy);
  write_text(out / "rate_energy_inner.dat", loglog_columns(inner, "log10(epsilon) log10(E)"));
  write_text(out / "rate_energy_outer.dat", loglog_columns(outer, "log10(z') log10(E)"));
  Outcome o;
  o.result = to_json(e);
  o.pass = judge_energy(e).pass;
  return o;
}

Outcome oracle_suite() {
  const OracleSuiteReport r = run_oracle_suite();
  Outcome o;
  o.pass = r.pass;
  o.result = Json{{"affine",
                   {{"fem_nodal_error", num(r.affine_fem_error)},
                    {"fem_gradient_error", num(r.affine_gradient_error)},
                    {"fd_nodal_error", num(r.affine_fd_error)},
                    {"pass", r.affine_pass}}},
                  {"laplace_fem_vs_fd", {{"disagreement", r.laplace_disagreement}, {"pass", r.laplace_pass}}},
                  {"lame_fem_vs_fd", {{"disagreement", r.lame_disagreement}, {"pass", r.lame_pass}}},
                  {"seminorm",
                   {{"sampled", num(r.seminorm_sampled)},
                    {"brute_force", num(r.seminorm_brute)},
                    {"constant_field", num(r.seminorm_constant)},
                    {"pass", r.seminorm_pass}}},
                  {"pass", r.pass}};
  return o;
}

Json config_json(const Config& c) {
  // threads changes scheduling only, so it stays out of the report.
  Json j = Json::object();
  for (const auto& [k, v] : c.values())
    if (k != "threads") j[k] = v;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient estimates in thin gaps between two close-to-touching boundaries"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "thingap_out";
  std::vector<std::string> overrides;
  std::optional<long> seed, threads;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--out", out_dir, "output directory (THINGAP_OUT overrides)");
  app.add_option("--set", overrides, "override one key, key=value (repeatable)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"validate-geometry", "check the boundary profiles and the generated mesh"},
      {"validate-coefficients", "check ellipticity and Hoelder norms of the coefficients"},
      {"solve", "solve one problem at the configured epsilon"},
      {"sweep", "gradient blow-up sweep over epsilon"},
      {"prop21", "local Hoelder estimate for the auxiliary fields"},
      {"energy-scaling", "energy of w in the inner and outer regimes"},
      {"oracle-suite", "compare against closed-form and finite-difference references"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  thingap::Config cfg;
  std::filesystem::path out;
  try {
    if (!config_path.empty()) cfg.merge_file(config_path);
    for (const auto& kv : overrides) cfg.merge_override(kv);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (threads) cfg.set("threads", std::to_string(*threads));
    if (const char* env = std::getenv("THINGAP_OUT"); env && *env) out_dir = env;
    out = out_dir;
    std::filesystem::create_directories(out);
  } catch (const thingap::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    Outcome o;
    if (command == "validate-geometry") o = validate_geometry(cfg);
    else if (command == "validate-coefficients") o = validate_coefficients(cfg);
    else if (command == "solve") o = solve(cfg, out);
    else if (command == "sweep") o = sweep(cfg, out);
    else if (command == "prop21") o = prop21(cfg);
    else if (command == "energy-scaling") o = energy(cfg, out);
    else o = oracle_suite();

    Json report{{"command", command}, {"config", config_json(cfg)}, {"pass", o.pass}, {"result", o.result}};
    write_json(out / "report.json", report);
    write_text(out / "effective.cfg", cfg.serialize());
    std::cout << fmt::format("{}: {} (report {})\n", command, o.pass ? "pass" : "FAIL", (out / "report.json").string());
    return o.pass ? 0 : 1;
  } catch (const thingap::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const thingap::UnsupportedError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
