#pragma once

// Flat "key = value" configuration with dotted keys.  Every key has a
// default; unknown keys are rejected.  Lines starting with '#' are comments.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "auxiliary.hpp"
#include "coefficients.hpp"
#include "errors.hpp"
#include "mesh.hpp"
#include "verify.hpp"

namespace thingap {

class Config {
 public:
  Config() {
    for (const auto& [k, v] : defaults()) values_[k] = v;
  }

  static const std::vector<std::pair<std::string, std::string>>& defaults() {
    static const std::vector<std::pair<std::string, std::string>> d{
        {"epsilon", "0.01"},
        {"sweep.epsilons", "0.1,0.03,0.01,0.003,0.001"},
        {"sweep.gate", "true"},
        {"gamma", "0.5"},
        {"dim", "2"},
        {"profile.kind", "power"},
        {"profile.c1", "1"},
        {"profile.c2", "-1"},
        {"system.kind", "lame"},
        {"system.lambda1", "1"},
        {"system.mu1", "1"},
        {"system.m", "2"},
        {"bc.kind", "constant_jump"},
        {"bc.phi", "1,0"},
        {"bc.psi", "0,0"},
        {"prop21.c", "0.25"},
        {"prop21.s_fractions", "0.25,0.5,1.0"},
        {"prop21.pairs", "4000"},
        {"mesh.layers", "16"},
        {"mesh.aspect", "2"},
        {"mesh.dxmax", "0.02"},
        {"mesh.xrange", "1"},
        {"mesh.quadrature", "3"},
        {"lateral.kind", "auxiliary"},
        {"energy.epsilons", "0.1,0.03,0.01,0.003,0.001"},
        {"energy.epsilon", "0.001"},
        {"energy.z_primes", "0.03,0.06,0.12,0.24"},
        {"energy.layers", "16"},
        {"energy.aspect", "0.25"},
        {"energy.dxmax", "0.005"},
        {"samples.geometry", "1000"},
        {"samples.ellipticity", "10000"},
        {"samples.holder", "10000"},
        {"samples.auxiliary", "1000"},
        {"seed", "1"},
        {"threads", "1"},
    };
    return d;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
    values_[key] = value;
  }

  /// Parses "key = value" text.
  void merge_text(const std::string& text, const std::string& origin = "config") {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void merge_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    merge_text(ss.str(), path);
  }

  /// "key=value" as given on the command line.
  void merge_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const { return parse_double(str(key), key); }

  long integer(const std::string& key) const {
    const std::string& s = str(key);
    long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("key '" + key + "' needs an integer, got '" + s + "'");
    return v;
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key '" + key + "' needs true or false, got '" + s + "'");
  }

  std::vector<double> list(const std::string& key) const { return parse_list(str(key), key); }

  /// Effective configuration, one "key = value" line per key in sorted order.
  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static double parse_double(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    double v = 0;
    if (!(in >> v) || !in.eof()) throw ConfigError("key '" + key + "' needs a number, got '" + s + "'");
    return v;
  }

  static std::vector<double> parse_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
    if (out.empty()) throw ConfigError("key '" + key + "' needs a comma-separated list");
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Building library objects from a configuration

inline int config_dim(const Config& c) {
  const long n = c.integer("dim");
  if (n < 2) throw ConfigError("dim must be at least 2");
  return int(n);
}

inline ProfileSpec make_profile(const Config& c) {
  ProfileSpec p;
  p.kind = c.str("profile.kind");
  if (p.kind == "custom") throw ConfigError("profile.kind = custom needs profiles supplied through the library API");
  if (p.kind != "power" && p.kind != "flat") throw ConfigError("profile.kind must be power or flat");
  p.c1 = c.number("profile.c1");
  p.c2 = c.number("profile.c2");
  if (p.kind == "power" && !(p.c1 >= 0.0 && p.c2 <= 0.0))
    throw ConfigError("profile.c1 must be >= 0 and profile.c2 <= 0 so the gap stays open");
  return p;
}

inline CoefficientSet make_coefficients(const Config& c, int n) {
  const std::string kind = c.str("system.kind");
  if (kind == "lame") return lame_as_general({c.number("system.lambda1"), c.number("system.mu1")}, n);
  const long m = c.integer("system.m");
  if (m < 1) throw ConfigError("system.m must be positive");
  CoefficientSet cs;
  if (kind == "identity") cs = identity_system(int(m), n);
  else if (kind == "holder_demo") cs = holder_demo(int(m), n, c.number("gamma"));
  else if (kind == "custom") throw ConfigError("system.kind = custom needs coefficients supplied through the library API");
  else throw ConfigError("system.kind must be lame, identity, holder_demo or custom");
  cs.gamma = c.number("gamma");
  return cs;
}

/// "a,b" for constants; "a0,b0; a1,b1; a2,b2" (coefficients of 1, x'_1, |x'|^2)
/// for polynomial data.
inline BoundaryData<2> make_boundary_data(const Config& c, int m) {
  const std::string kind = c.str("bc.kind");
  const double gamma = c.number("gamma");
  auto vec = [&](const std::string& text, const std::string& key) {
    const auto v = Config::parse_list(text, key);
    if (int(v.size()) != m) throw ConfigError("key '" + key + "' needs " + std::to_string(m) + " components");
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size())));
  };
  if (kind == "constant_jump") return BoundaryData<2>::constant_jump(vec(c.str("bc.phi"), "bc.phi"), vec(c.str("bc.psi"), "bc.psi"), gamma);
  if (kind == "polynomial") {
    auto coeffs = [&](const std::string& key) {
      std::array<Eigen::VectorXd, 3> a;
      std::stringstream ss(c.str(key));
      std::string part;
      int k = 0;
      while (std::getline(ss, part, ';')) {
        if (k >= 3) throw ConfigError("key '" + key + "' takes at most three ';'-separated vectors");
        a[std::size_t(k++)] = vec(part, key);
      }
      for (; k < 3; ++k) a[std::size_t(k)] = Eigen::VectorXd::Zero(m);
      return a;
    };
    return BoundaryData<2>::polynomial(coeffs("bc.phi"), coeffs("bc.psi"), gamma);
  }
  if (kind == "custom") throw ConfigError("bc.kind = custom needs boundary data supplied through the library API");
  throw ConfigError("bc.kind must be constant_jump, polynomial or custom");
}

inline MeshParams make_mesh_params(const Config& c, const std::string& prefix = "mesh") {
  MeshParams p;
  p.layers = int(c.integer(prefix + ".layers"));
  p.aspect = c.number(prefix + ".aspect");
  p.dxmax = c.number(prefix + ".dxmax");
  p.xrange = c.number("mesh.xrange");
  if (p.layers < 4) throw ConfigError(prefix + ".layers must be at least 4");
  if (!(p.aspect > 0.0) || !(p.dxmax > 0.0)) throw ConfigError(prefix + " grading parameters must be positive");
  if (!(p.xrange > 0.0) || p.xrange > 1.0) throw ConfigError("mesh.xrange must lie in (0, 1]");
  return p;
}

inline LateralClosure make_lateral(const Config& c) {
  const std::string k = c.str("lateral.kind");
  if (k == "auxiliary") return LateralClosure::auxiliary;
  if (k == "natural") return LateralClosure::natural;
  throw ConfigError("lateral.kind must be auxiliary or natural");
}

inline SweepPlan make_sweep_plan(const Config& c) {
  if (config_dim(c) != 2) throw ConfigError("the discrete solver is two-dimensional; set dim = 2");
  SweepPlan p;
  p.epsilons = c.list("sweep.epsilons");
  p.gamma = c.number("gamma");
  p.profile = make_profile(c);
  p.coefficients = make_coefficients(c, 2);
  p.data = make_boundary_data(c, p.coefficients.m);
  p.mesh = make_mesh_params(c);
  p.quadrature = int(c.integer("mesh.quadrature"));
  if (p.quadrature != 1 && p.quadrature != 3 && p.quadrature != 7) throw ConfigError("mesh.quadrature must be 1, 3 or 7");
  p.lateral = make_lateral(c);
  p.reliability_gate = c.flag("sweep.gate");
  p.seed = std::uint64_t(c.integer("seed"));
  const long threads = c.integer("threads");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  p.threads = unsigned(threads);
  p.validate();
  return p;
}

inline EnergyPlan make_energy_plan(const Config& c, const SweepPlan& sweep) {
  EnergyPlan e;
  e.epsilons = c.list("energy.epsilons");
  e.outer_epsilon = c.number("energy.epsilon");
  e.z_primes = c.list("energy.z_primes");
  e.mesh = make_mesh_params(c, "energy");
  e.quadrature = sweep.quadrature;
  e.lateral = sweep.lateral;
  e.threads = sweep.threads;
  if (e.epsilons.size() < 3 || e.z_primes.size() < 3) throw ConfigError("energy fits need at least 3 points");
  return e;
}

inline Prop21Settings make_prop21_settings(const Config& c) {
  Prop21Settings s;
  s.c = c.number("prop21.c");
  s.s_fractions = c.list("prop21.s_fractions");
  const long pairs = c.integer("prop21.pairs");
  if (pairs < 1) throw ConfigError("prop21.pairs must be positive");
  s.pairs = std::size_t(pairs);
  s.seed = std::uint64_t(c.integer("seed"));
  if (!(s.c > 0.0)) throw ConfigError("prop21.c must be positive");
  for (double f : s.s_fractions)
    if (!(f > 0.0) || f > 1.0) throw ConfigError("prop21.s_fractions must lie in (0, 1]");
  return s;
}

}  // namespace thingap
