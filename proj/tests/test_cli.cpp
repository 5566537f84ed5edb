#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "thingap/config.hpp"
#include "thingap/report_io.hpp"

using namespace thingap;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const int status = std::system((std::string(THINGAP_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("thingap_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

BlowupReport small_report(std::size_t rows) {
  BlowupReport r;
  for (std::size_t k = 0; k < rows; ++k) {
    EpsilonRecord rec;
    rec.epsilon = 0.1 / double(k + 1);
    rec.m_center = 1.0 / 3.0 + double(k);
    rec.c_upper = 0.1 * double(k);
    rec.c_lower = std::nan("");
    rec.energy_e0 = 1e-300;
    if (k == 1) rec.flags = {"unreliable", "gate"};
    r.records.push_back(rec);
  }
  return r;
}

}  // namespace

TEST(Config, DefaultsAndParsing) {
  Config c;
  EXPECT_EQ(c.str("system.kind"), "lame");
  c.merge_text("# comment line\n  epsilon = 0.05   # trailing\n\nsweep.epsilons=0.2, 0.1 ,0.05\n");
  EXPECT_DOUBLE_EQ(c.number("epsilon"), 0.05);
  EXPECT_EQ(c.list("sweep.epsilons"), (std::vector<double>{0.2, 0.1, 0.05}));
  c.merge_override("sweep.gate=false");
  EXPECT_FALSE(c.flag("sweep.gate"));
}

TEST(Config, RejectsBadInput) {
  Config c;
  EXPECT_THROW(c.merge_text("bogus = 1\n"), ConfigError);
  EXPECT_THROW(c.merge_text("epsilon 0.1\n"), ConfigError);
  EXPECT_THROW(c.merge_override("epsilon"), ConfigError);
  c.set("epsilon", "abc");
  EXPECT_THROW(c.number("epsilon"), ConfigError);
  c.set("mesh.layers", "2.5");
  EXPECT_THROW(c.integer("mesh.layers"), ConfigError);
  EXPECT_THROW(c.merge_file("/nonexistent/thingap.cfg"), ConfigError);
}

TEST(Config, SerializeRoundTrip) {
  Config a;
  a.merge_text("gamma = 0.4\nsystem.kind = identity\nsystem.m = 1\nbc.phi = 1\nbc.psi = 0\n");
  Config b;
  b.merge_text(a.serialize());
  EXPECT_EQ(a.values(), b.values());
  EXPECT_EQ(a.serialize(), b.serialize());
}

TEST(Config, BuildsPlans) {
  Config c;
  const SweepPlan p = make_sweep_plan(c);
  EXPECT_EQ(p.epsilons.size(), 5u);
  EXPECT_EQ(p.coefficients.m, 2);
  c.set("bc.phi", "1,0,0");
  EXPECT_THROW(make_sweep_plan(c), ConfigError);
  Config d;
  d.set("sweep.epsilons", "0.1,0.01");
  EXPECT_THROW(make_sweep_plan(d), ConfigError);
  Config e;
  e.set("dim", "3");
  EXPECT_THROW(make_sweep_plan(e), ConfigError);
  Config f;
  f.set("bc.kind", "polynomial");
  f.set("bc.phi", "1,0; 0.5,0");
  f.set("bc.psi", "0,0");
  EXPECT_NO_THROW(make_sweep_plan(f));
}

TEST(Tables, SweepCsvRoundTrip) {
  const BlowupReport r = small_report(5);
  const std::string text = sweep_csv(r);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  const auto rows = parse_sweep_csv(text);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].epsilon, r.records[k].epsilon);
    EXPECT_EQ(rows[k].m_center, r.records[k].m_center);
    EXPECT_EQ(rows[k].c_upper, r.records[k].c_upper);
    EXPECT_TRUE(std::isnan(rows[k].c_lower));
    EXPECT_EQ(rows[k].energy_e0, 1e-300);
  }
  EXPECT_EQ(rows[1].flags, "unreliable;gate");
}

TEST(Tables, EmptyReportGivesHeaderOnly) {
  const std::string text = sweep_csv(BlowupReport{});
  EXPECT_EQ(text, std::string(sweep_csv_header) + "\n");
  EXPECT_TRUE(parse_sweep_csv(text).empty());
  EXPECT_THROW(parse_sweep_csv("eps,M\n1,2\n"), IoError);
}

TEST(Tables, EmitWritesFiles) {
  const fs::path dir = scratch("tables");
  emit_tables(small_report(3), dir);
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "rate_M_center.dat"));
  EXPECT_TRUE(fs::exists(dir / "profile_0.1.csv"));
  EXPECT_EQ(parse_sweep_csv(slurp(dir / "sweep.csv")).size(), 3u);
}

TEST(Tables, UnwritableDirectoryThrows) {
  const fs::path dir = scratch("blocked");
  // A regular file where a directory is expected.
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(emit_tables(small_report(3), dir / "file" / "sub"), IoError);
}

TEST(Json, NonFiniteNumbersBecomeNull) {
  EXPECT_TRUE(num(std::nan("")).is_null());
  EXPECT_TRUE(num(HUGE_VAL).is_null());
  EXPECT_EQ(num(0.1).get<double>(), 0.1);
}

TEST(Cli, MissingConfigIsConfigurationError) {
  const fs::path out = scratch("cli_missing");
  EXPECT_EQ(run_cli("sweep --config /nonexistent/thingap.cfg --out " + out.string()), 2);
}

TEST(Cli, BadOverridesAreConfigurationErrors) {
  const fs::path out = scratch("cli_bad");
  EXPECT_EQ(run_cli("sweep --set bogus=1 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("sweep --set sweep.epsilons=0.1,0.01 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
}

TEST(Cli, OracleSuitePasses) {
  const fs::path out = scratch("cli_oracle");
  EXPECT_EQ(run_cli("oracle-suite --out " + out.string()), 0);
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(j["command"], "oracle-suite");
  EXPECT_TRUE(j["pass"].get<bool>());
}

TEST(Cli, SweepWritesReportAndTables) {
  const fs::path out = scratch("cli_sweep");
  const fs::path cfg = out / "in.cfg";
  std::ofstream(cfg) << "# three gaps keep this quick\nsweep.epsilons = 0.1, 0.03, 0.01\n";
  EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + out.string()), 0);
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  ASSERT_TRUE(j["result"].contains("rho"));
  EXPECT_NEAR(j["result"]["rho"].get<double>(), 1.0, 0.15);
  EXPECT_EQ(parse_sweep_csv(slurp(out / "sweep.csv")).size(), 3u);
  Config back;
  back.merge_file((out / "effective.cfg").string());
  EXPECT_EQ(back.str("sweep.epsilons"), "0.1, 0.03, 0.01");
}
