#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pchain/commands.hpp"
#include "pchain/config.hpp"
#include "pchain/io.hpp"
#include "pchain/sweep.hpp"

using namespace pchain;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

const std::string kCaseATrap =
    "[trap]\nfc_Hz = 8e9\nfz_Hz = 490e6\nb_T_per_m = 1800\n[thermal]\ntemperature_mK = 80\nl_bar = 2\n";
const std::string kCaseA = kCaseATrap + "[chain]\nspacing_um = 10\n";

std::string csv_of(const Report& r) {
  std::ostringstream os;
  write_csv(os, r);
  return os.str();
}

// Value column of the first row whose second column equals `key`.
double lookup(const Report& r, const std::string& table, std::size_t key_col, const std::string& key,
              std::size_t value_col) {
  for (const auto& t : r.tables)
    if (t.name == table)
      for (const auto& row : t.rows)
        if (format_cell(row[key_col]) == key) return std::get<double>(row[value_col]);
  ADD_FAILURE() << "no " << key << " in " << table;
  return 0.0;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::filesystem::path& out) {
  const std::string cmd = std::string(PCHAIN_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pchain_test_" + name);
}

const std::string kConfigs = PCHAIN_CONFIG_DIR;

}  // namespace

TEST(Config, ParsesSectionsAndUnits) {
  const auto cfg = parse(kCaseA + "[run]\nmode = approx\norientation = x\n");
  EXPECT_EQ(cfg.mode, AnomalyMode::Approx1e3);
  EXPECT_EQ(cfg.orientation, Orientation::TransverseX);
  EXPECT_DOUBLE_EQ(*cfg.spacing, 10e-6);
  EXPECT_DOUBLE_EQ(*cfg.temperature, 0.08);
  EXPECT_DOUBLE_EQ(cfg.occupations.l_bar, 2.0);
  const auto p = trap_params(cfg);
  EXPECT_NEAR(p.B0, hz_to_angular(8e9) * cfg.constants.m_e / cfg.constants.e, 1e-15);
}

TEST(Config, RejectsUnknownKeysAndSections) {
  EXPECT_THROW(parse("[trap]\nfc = 1\n"), ConfigError);
  EXPECT_THROW(parse("[nonsense]\na = 1\n"), ConfigError);
  EXPECT_THROW(parse("[trap]\nfc_Hz = eight\n"), ConfigError);
  EXPECT_THROW(parse("[run]\nmode = fast\n"), ConfigError);
  EXPECT_THROW(parse("[thermal]\ntemperature_mK = 80\nk_bar = 1\n"), ConfigError);
  EXPECT_THROW(parse("[constants]\ng = 3\n"), InvalidInput);
}

TEST(Config, PerSiteOverrides) {
  const auto cfg = parse(kCaseA + "[site.2]\nb_T_per_m = 900\n");
  EXPECT_DOUBLE_EQ(trap_params(cfg, 0).b, 1800.0);
  EXPECT_DOUBLE_EQ(trap_params(cfg, 1).b, 900.0);
  EXPECT_THROW(trap_params(parse("[trap]\nfz_Hz = 1e8\n")), ConfigError);
}

TEST(Config, SampleConfigsLoad) {
  for (const char* name : {"case_a_d10.ini", "case_b_d10.ini", "chain5.ini", "sweep.ini", "oracle.ini"})
    EXPECT_NO_THROW(load_config(kConfigs + "/" + name)) << name;
}

TEST(Io, NumberFormatting) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(21605.828876929634), "21605.8288769");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_cell(Cell{true}), "1");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
}

TEST(Io, CsvHeaderAndJson) {
  Report r;
  stamp(r, "demo", "ExactG", "AxialZ");
  r.table("t", {"x", "y"}).add({1.5, std::string("q")});
  const std::string csv = csv_of(r);
  EXPECT_EQ(csv.rfind("# command: demo\n", 0), 0u);
  EXPECT_NE(csv.find("# constants_version: CODATA-2018\n"), std::string::npos);
  EXPECT_NE(csv.find("# table: t\nx,y\n1.5,q\n"), std::string::npos);
  const auto j = to_json(r);
  EXPECT_EQ(j["meta"]["command"], "demo");
}

TEST(Sweep, AxisParsing) {
  const auto a = SweepAxis::parse("10:50:5");
  EXPECT_EQ(a.count, 5u);
  EXPECT_DOUBLE_EQ(a.at(1), 20.0);
  EXPECT_DOUBLE_EQ(a.at(4), 50.0);
  EXPECT_EQ(SweepAxis::parse("7").count, 1u);
  EXPECT_THROW(SweepAxis::parse("1:2"), ConfigError);
  EXPECT_THROW(SweepAxis::parse("1:2:0"), ConfigError);
  EXPECT_THROW(SweepAxis::parse("1:2:x"), ConfigError);
}

TEST(Sweep, SinglePointMatchesDirectCalculation) {
  SweepSpec spec;
  spec.b = {1800.0, 1800.0, 1};
  spec.d = {10e-6, 10e-6, 1};
  spec.omega_z = {hz_to_angular(490e6), hz_to_angular(490e6), 1};
  spec.omega_c = {hz_to_angular(8e9), hz_to_angular(8e9), 1};
  spec.temperature = 0.08;
  spec.occupations.l_bar = 2.0;
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 1u);
  const auto dq = derive_quantities(TrapParams::from_frequencies(spec.omega_c.start, spec.omega_z.start, 1800.0));
  const auto p = pair_coupling(dq, dq, 10e-6);
  EXPECT_EQ(rows[0].jxy, p.jxy);
  const auto f = total_fidelity(dq, ThermalOccupations::from_temperature(dq, 0.08, 2.0), p.jxy, 2, p.xi);
  EXPECT_EQ(rows[0].fidelity, f.total);
}

TEST(Sweep, CouplingQuadraticInGradientAndOrdered) {
  SweepSpec spec;
  spec.b = {100.0, 1000.0, 10};
  spec.d = {10e-6, 20e-6, 2};
  spec.omega_z = {hz_to_angular(490e6), hz_to_angular(490e6), 1};
  spec.omega_c = {hz_to_angular(8e9), hz_to_angular(8e9), 1};
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 20u);
  EXPECT_DOUBLE_EQ(rows[1].d, 20e-6);  // d varies faster than b
  for (std::size_t i = 0; i < rows.size(); i += 2)
    EXPECT_NEAR(rows[i].jxy / (rows[i].b * rows[i].b), rows[0].jxy / (rows[0].b * rows[0].b), 1e-12 * rows[0].jxy);
  int pareto = 0;
  for (const auto& r : rows) pareto += r.pareto;
  EXPECT_LE(pareto, 2);
}

TEST(Sweep, GridTooLarge) {
  SweepSpec spec;
  spec.b = {1.0, 2.0, 1000};
  spec.d = {1e-5, 2e-5, 1000};
  spec.omega_z = {1e9, 1e9, 1};
  spec.omega_c = {2e10, 2e10, 2};
  EXPECT_THROW(run_sweep(spec), GridTooLarge);
}

TEST(Sweep, RegimeProblemsRecordedNotThrown) {
  SweepSpec spec;
  spec.b = {100.0, 100.0, 1};
  spec.d = {10e-6, 10e-6, 1};
  spec.omega_z = {hz_to_angular(500e6), hz_to_angular(500e6), 1};
  spec.omega_c = {hz_to_angular(600e6), hz_to_angular(600e6), 1};  // complex modified cyclotron
  const auto rows = run_sweep(spec);
  EXPECT_FALSE(rows[0].regime_ok);
  EXPECT_FALSE(rows[0].note.empty());
}

TEST(Commands, FreqsCaseA) {
  std::string err;
  const auto res = run_command("freqs", parse(kCaseA), err);
  EXPECT_EQ(res.exit_code, exit_code::ok) << err;
  EXPECT_NEAR(lookup(res.report, "quantities", 1, "epsilon", 2), 0.0140996575709, 1e-12);
  EXPECT_NEAR(lookup(res.report, "quantities", 1, "omega_a_Hz", 2), 9.277216e6, 1.0);
}

TEST(Commands, CouplingsWithZeroGradient) {
  std::string err;
  const auto res = run_command("couplings", parse("[trap]\nfc_Hz = 8e9\nfz_Hz = 490e6\n[chain]\nspacing_um = 10\n"), err);
  EXPECT_EQ(res.exit_code, exit_code::ok) << err;
  EXPECT_EQ(std::get<double>(res.report.tables[0].rows[0][5]), 0.0);
  std::string err2;
  const auto tr = run_command("transfer", parse("[trap]\nfc_Hz = 8e9\nfz_Hz = 490e6\n[chain]\nspacing_um = 10\n"), err2);
  EXPECT_EQ(tr.exit_code, exit_code::input_error);
  EXPECT_NE(err2.find("Jxy > 0"), std::string::npos);
}

TEST(Commands, HierarchyViolationIsRegimeExit) {
  std::string err;
  const auto res = run_command("couplings", load_config(kConfigs + "/bad_hierarchy.ini"), err);
  EXPECT_EQ(res.exit_code, exit_code::regime_violation);
}

TEST(Commands, TransferFastPathAgreesWithDense) {
  auto cfg = parse(kCaseATrap + "[chain]\nspacing_um = 10\nn_sites = 4\n[transfer]\npoints = 11\n");
  std::string e1, e2;
  const auto dense = run_command("transfer", cfg, e1);
  cfg.transfer.fast_path = true;
  const auto fast = run_command("transfer", cfg, e2);
  ASSERT_EQ(dense.exit_code, exit_code::ok) << e1;
  ASSERT_EQ(fast.exit_code, exit_code::ok) << e2;
  const auto& a = dense.report.tables[0].rows;
  const auto& b = fast.report.tables[0].rows;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(std::get<double>(a[k][2]), std::get<double>(b[k][2]), 1e-9);
}

TEST(Commands, Table1PassesAndReportsBothReadings) {
  std::string err;
  const auto res = run_command("table1", RunConfig{}, err);
  EXPECT_EQ(res.exit_code, exit_code::ok) << err;
  EXPECT_EQ(res.report.tables[0].rows.size(), 6u);
}

TEST(Commands, OracleOverflowIsInputError) {
  RunConfig cfg;
  cfg.oracle.trunc = {9, 9};
  std::string err;
  EXPECT_EQ(run_command("oracle", cfg, err).exit_code, exit_code::input_error);
  EXPECT_EQ(run_command("bogus", cfg, err).exit_code, exit_code::input_error);
}

TEST(Binary, ExitCodesAndDeterminism) {
  const auto out1 = scratch("a.csv"), out2 = scratch("b.csv");
  EXPECT_EQ(run_cli("--config " + kConfigs + "/case_a_d10.ini fidelity", out1), 0);
  EXPECT_EQ(run_cli("--config " + kConfigs + "/case_a_d10.ini fidelity", out2), 0);
  const std::string a = slurp(out1);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(out2));
  EXPECT_EQ(a.rfind("# command: fidelity", 0), 0u);

  EXPECT_EQ(run_cli("fidelity", out1), 1);
  EXPECT_EQ(run_cli("--config /nonexistent.ini freqs", out1), 1);
  EXPECT_EQ(run_cli("--mode sideways table1", out1), 1);
  EXPECT_EQ(run_cli("--config " + kConfigs + "/bad_hierarchy.ini couplings", out1), 2);
  EXPECT_EQ(run_cli("table1", out1), 0);
}

TEST(Binary, JsonAndOutFile) {
  const auto out = scratch("c.json"), log = scratch("c.log");
  EXPECT_EQ(run_cli("--config " + kConfigs + "/case_b_d10.ini --format json --out " + out.string() + " couplings", log),
            0);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["meta"]["command"], "couplings");
  EXPECT_EQ(j["tables"]["couplings"].size(), 1u);
}

TEST(Binary, ModeFlagOverridesConfig) {
  const auto out = scratch("d.csv");
  EXPECT_EQ(run_cli("--config " + kConfigs + "/case_a_d10.ini --mode approx couplings", out), 0);
  EXPECT_NE(slurp(out).find("Approx1e3"), std::string::npos);
}
