#pragma once

// JSON and CSV output for sweep reports.  CSV numbers use 17 significant
// digits; JSON numbers use the shortest text that reads back to the same
// double.  Non-finite values become null in JSON and "nan" in CSV.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "verify.hpp"

namespace thingap {

using Json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const RateFit& f) {
  return Json{{"slope", num(f.slope)},
              {"intercept", num(f.intercept)},
              {"half_width_95", num(f.half_width)},
              {"residual_sd", num(f.residual_sd)},
              {"points", f.points}};
}

inline Json to_json(const EnvelopeCheck& c) {
  Json cs = Json::array();
  for (double v : c.constants) cs.push_back(num(v));
  return Json{{"constants", cs}, {"ratio", num(c.ratio)}, {"applicable", c.applicable}, {"pass", c.pass}};
}

inline Json to_json(const std::vector<ProbeSample>& probes) {
  Json a = Json::array();
  for (const auto& p : probes) a.push_back(Json::array({num(p.x), num(p.y), num(p.grad_norm)}));
  return a;
}

inline Json to_json(const EpsilonRecord& r) {
  return Json{{"epsilon", num(r.epsilon)},
              {"delta0", num(r.delta0)},
              {"M_center", num(r.m_center)},
              {"centerline_sup", num(r.centerline_sup)},
              {"centerline_min", num(r.centerline_min)},
              {"M_center_refined", num(r.m_center_refined)},
              {"refinement_change", num(r.refinement_change)},
              {"reliable", r.reliable},
              {"C_upper", num(r.c_upper)},
              {"C_lower", num(r.c_lower)},
              {"energy_E0", num(r.energy_e0)},
              {"l2_norm_u", num(r.l2_norm)},
              {"norm_terms", num(r.norm_terms)},
              {"superposition_error", num(r.superposition_error)},
              {"residual", num(r.residual)},
              {"vertices", r.vertices},
              {"triangles", r.triangles},
              {"flags", r.flags},
              {"centerline", to_json(r.centerline)},
              {"profile", to_json(r.profile)}};
}

/// Pass/fail summary of a sweep against the blow-up expectations.
struct SweepVerdict {
  bool rho_ok = false;
  bool pass = false;
  double rho_low = 0.0, rho_high = 0.0;
};

inline SweepVerdict judge_sweep(const BlowupReport& r) {
  SweepVerdict v;
  // With a data jump at the neck the gradient blows up like 1/eps; without
  // one it stays bounded.
  const double expected = r.jump_component >= 0 ? 1.0 : 0.0;
  v.rho_low = expected - 0.15;
  v.rho_high = expected + 0.15;
  v.rho_ok = r.rho >= v.rho_low && r.rho <= v.rho_high;
  v.pass = v.rho_ok && r.all_reliable && r.finite && r.profile_check.pass && r.lower_check.pass &&
           r.envelopes_consistent && r.superposition_max <= 10 * solver_tolerance &&
           (r.lateral.epsilon == 0.0 || r.lateral.pass);
  return v;
}

inline Json to_json(const BlowupReport& r) {
  const SweepVerdict v = judge_sweep(r);
  Json recs = Json::array();
  for (const auto& rec : r.records) recs.push_back(to_json(rec));
  return Json{{"rho", num(r.rho)},
              {"rho_fit", to_json(r.rho_fit)},
              {"rho_expected_interval", Json::array({v.rho_low, v.rho_high})},
              {"jump_component", r.jump_component},
              {"all_reliable", r.all_reliable},
              {"finite", r.finite},
              {"superposition_max", num(r.superposition_max)},
              {"profile_check", to_json(r.profile_check)},
              {"lower_bound_check", to_json(r.lower_check)},
              {"envelopes_consistent", r.envelopes_consistent},
              {"lateral_check",
               {{"epsilon", num(r.lateral.epsilon)},
                {"max_relative_difference", num(r.lateral.max_relative_difference)},
                {"pass", r.lateral.pass}}},
              {"pass", v.pass},
              {"records", recs}};
}

inline Json to_json(const std::vector<EnergyRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back(Json{{"scale", num(r.scale)},
                     {"z_prime", num(r.z_prime)},
                     {"epsilon", num(r.epsilon)},
                     {"delta", num(r.delta)},
                     {"energy", num(r.energy)}});
  return a;
}

struct EnergyVerdict {
  bool inner_ok = false;
  bool outer_ok = false;
  bool pass = false;
};

inline EnergyVerdict judge_energy(const EnergyReport& e, double tolerance = 0.2) {
  EnergyVerdict v;
  if (e.degenerate) {
    v.inner_ok = v.outer_ok = v.pass = true;
    return v;
  }
  v.inner_ok = std::abs(e.inner_fit.slope - e.expected_inner) <= tolerance;
  v.outer_ok = std::abs(e.outer_fit.slope - e.expected_outer) <= tolerance;
  v.pass = v.inner_ok && v.outer_ok;
  return v;
}

inline Json to_json(const EnergyReport& e) {
  const EnergyVerdict v = judge_energy(e);
  Json j{{"component", e.component}, {"degenerate", e.degenerate}};
  j["inner"] = {{"expected_exponent", num(e.expected_inner)}, {"rows", to_json(e.inner)}};
  j["outer"] = {{"expected_exponent", num(e.expected_outer)}, {"rows", to_json(e.outer)}};
  j["inner_edge_diagnostic"] = {{"rows", to_json(e.edge)}};
  if (!e.degenerate) {
    j["inner"]["fit"] = to_json(e.inner_fit);
    j["outer"]["fit"] = to_json(e.outer_fit);
    j["inner_edge_diagnostic"]["fit"] = to_json(e.edge_fit);
  }
  j["inner_pass"] = v.inner_ok;
  j["outer_pass"] = v.outer_ok;
  j["pass"] = v.pass;
  return j;
}

inline Json to_json(const Prop21Sweep& p) {
  Json per = Json::array();
  for (std::size_t k = 0; k < p.epsilons.size(); ++k) {
    Json entries = Json::array();
    for (const auto& e : p.reports[k].entries)
      entries.push_back(Json{{"z_prime", num(e.z_prime)},
                             {"s_fraction", num(e.s_fraction)},
                             {"s", num(e.s)},
                             {"delta", num(e.delta)},
                             {"seminorm", num(e.seminorm)},
                             {"rhs", num(e.rhs)},
                             {"ratio", num(e.ratio)},
                             {"delta_ratio_min", num(e.delta_ratio_min)}});
    per.push_back(Json{{"epsilon", num(p.epsilons[k])},
                       {"constant", num(p.reports[k].constant)},
                       {"cells_comparable", p.reports[k].cells_comparable},
                       {"entries", entries}});
  }
  return Json{{"component", p.component},
              {"stability", to_json(p.stability)},
              {"calibration",
               {{"sampled", num(p.calibration_sampled)},
                {"brute_force", num(p.calibration_brute)},
                {"pass", p.calibration_pass}}},
              {"pass", p.pass},
              {"per_epsilon", per}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string csv_number(double v) { return fmt::format("{:.17g}", v); }

inline const char* sweep_csv_header = "epsilon,M_center,C_upper,C_lower,energy_E0,flags";

inline std::string sweep_csv(const BlowupReport& r) {
  std::string out = std::string(sweep_csv_header) + "\n";
  for (const auto& rec : r.records) {
    std::string flags;
    for (const auto& f : rec.flags) flags += (flags.empty() ? "" : ";") + f;
    out += fmt::format("{},{},{},{},{},{}\n", csv_number(rec.epsilon), csv_number(rec.m_center), csv_number(rec.c_upper),
                       csv_number(rec.c_lower), csv_number(rec.energy_e0), flags);
  }
  return out;
}

inline std::string profile_csv(const EpsilonRecord& rec) {
  std::string out = "x,y,grad_norm\n";
  for (const auto& p : rec.profile)
    out += fmt::format("{},{},{}\n", csv_number(p.x), csv_number(p.y), csv_number(p.grad_norm));
  return out;
}

/// Two columns, log10(scale) and log10(value), for straight-line rate plots.
inline std::string loglog_columns(const std::vector<std::pair<double, double>>& pts, const std::string& header) {
  std::string out = "# " + header + "\n";
  for (const auto& [s, v] : pts)
    if (s > 0.0 && v > 0.0) out += fmt::format("{} {}\n", csv_number(std::log10(s)), csv_number(std::log10(v)));
  return out;
}

/// sweep.csv, profile_<eps>.csv and rate_M_center.dat in `dir`.
inline void emit_tables(const BlowupReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_text(dir / "sweep.csv", sweep_csv(r));
  std::vector<std::pair<double, double>> pts;
  for (const auto& rec : r.records) {
    write_text(dir / fmt::format("profile_{:g}.csv", rec.epsilon), profile_csv(rec));
    pts.emplace_back(rec.epsilon, rec.m_center);
  }
  write_text(dir / "rate_M_center.dat", loglog_columns(pts, "log10(epsilon) log10(M_center)"));
}

struct SweepRow {
  double epsilon, m_center, c_upper, c_lower, energy_e0;
  std::string flags;
};

inline std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != sweep_csv_header) throw IoError("unexpected sweep.csv header");
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 5) cells.emplace_back();
    if (cells.size() != 6) throw IoError("malformed sweep.csv row");
    auto d = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
    rows.push_back({d(cells[0]), d(cells[1]), d(cells[2]), d(cells[3]), d(cells[4]), cells[5]});
  }
  return rows;
}

}  // namespace thingap
