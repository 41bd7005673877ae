// Exercises the installed command-line surface end to end: exit codes,
// subcommand outputs and the oracle-equivalence path of `mvm`.
// Usage: test_cli <path-to-crosstack-binary>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "crosstack/csv.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
  if (ok) {
    std::cout << "ok: " << what << '\n';
  } else {
    std::cout << "FAILED: " << what << '\n';
    ++g_failures;
  }
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& cmd) {
  const fs::path log = "cli_test_out/last_run.log";
  fs::create_directories(log.parent_path());
  const std::string full = cmd + " > " + log.string() + " 2>&1";
  const int status = std::system(full.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(log);
  std::ostringstream os;
  os << is.rdbuf();
  r.output = os.str();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <crosstack-binary>\n";
    return 1;
  }
  const std::string bin = argv[1];
  fs::remove_all("cli_test_out");
  fs::create_directories("cli_test_out");

  {
    const RunResult r = run(bin + " validate-config");
    expect(r.exit_code == 0, "default config validates");
    expect(r.output.find("[device]") != std::string::npos, "validate-config echoes the config");
  }
  {
    const RunResult r = run(bin +
                            " --override geometry.mode=deepnet validate-config");
    expect(r.exit_code == 2, "deep-net config with equal RE exits 2");
    expect(r.output.find("complementary") != std::string::npos,
           "the violation message quotes the complementary-RE rule");
  }
  {
    std::ofstream os("cli_test_out/deepnet_bad.ini");
    os << "[geometry]\nmode = deepnet\nre_layer0 = true\nre_layer1 = true\n";
    os.close();
    const RunResult r = run(bin + " --config cli_test_out/deepnet_bad.ini validate-config");
    expect(r.exit_code == 2, "deep-net config file with equal RE exits 2");
    expect(r.output.find("complementary") != std::string::npos,
           "file-based violation quotes the rule");

    std::ofstream bad("cli_test_out/range_bad.ini");
    bad << "[device]\nr_set = -1\n";
    bad.close();
    const RunResult r2 = run(bin + " --config cli_test_out/range_bad.ini validate-config");
    expect(r2.exit_code == 2, "out-of-range config value exits 2");
    expect(r2.output.find("r_reset > r_set > 0") != std::string::npos,
           "range error names the violated invariant");

    std::ofstream ok("cli_test_out/ok.ini");
    ok << "[device]\nr_set = 9000\n";
    ok.close();
    const RunResult r3 = run(bin + " --config cli_test_out/ok.ini validate-config");
    expect(r3.exit_code == 0, "valid config file validates");
    expect(r3.output.find("r_set = 9000") != std::string::npos,
           "echo reflects the parsed value");
  }
  {
    const RunResult r = run(bin + " nosuchcommand");
    expect(r.exit_code == 2, "unknown subcommand exits 2");
  }
  {
    const RunResult r = run(bin + " experiment nosuch --out cli_test_out/nosuch");
    expect(r.exit_code == 2, "unknown experiment exits 2");
  }
  {
    const RunResult r =
        run(bin + " plan --layers 10 --mode deepnet --out cli_test_out/plan");
    expect(r.exit_code == 0, "plan runs");
    const fs::path csv = "cli_test_out/plan/plan.timeline.csv";
    expect(fs::exists(csv), "plan writes the timeline CSV");
    std::ifstream is(csv);
    int lines = 0;
    std::string line;
    while (std::getline(is, line)) ++lines;
    expect(lines == 21, "timeline holds a header plus 20 events");
    expect(r.output.find("speedup") != std::string::npos, "plan prints the speedup");
  }
  {
    // Oracle-equivalence path: ideal switches, no wire resistance, no
    // variation: solved currents must equal the dense product.
    Eigen::MatrixXd weights(20, 10);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 10; ++j) weights(i, j) = ((i * 10 + j) % 16) / 15.0;
    crosstack::write_csv("cli_test_out/weights.csv", "w", weights);
    Eigen::MatrixXd inputs(20, 1);
    for (int i = 0; i < 20; ++i) inputs(i, 0) = 0.02 * (i % 8);
    crosstack::write_csv("cli_test_out/inputs.csv", "v", inputs);

    const RunResult r = run(
        bin +
        " --override transistor.r_on=0 --override transistor.g_off=0"
        " --override geometry.r_wire_per_cell=0 --override device.sigma_set=0"
        " --override device.sigma_reset=0"
        " mvm --weights cli_test_out/weights.csv --inputs cli_test_out/inputs.csv"
        " --mode expansion --out cli_test_out/mvm --netlist cli_test_out/mvm/net.txt");
    expect(r.exit_code == 0, "mvm runs");
    const Eigen::MatrixXd solved = crosstack::read_csv_matrix("cli_test_out/mvm/mvm.columns.csv");
    const Eigen::MatrixXd ideal = crosstack::read_csv_matrix("cli_test_out/mvm/mvm.ideal.csv");
    double worst = 0.0;
    for (int j = 0; j < 10; ++j)
      worst = std::max(worst, std::abs(solved(j, 1) - ideal(j, 1)) /
                                  std::max(std::abs(ideal(j, 1)), 1e-30));
    expect(worst < 1e-9, "mvm columns equal the dense product at zero wire resistance");
    expect(fs::exists("cli_test_out/mvm/net.txt"), "mvm exports the branch list");
    expect(fs::exists("cli_test_out/mvm/effective_config.ini"), "mvm echoes the config");
  }
  {
    const RunResult r =
        run(bin + " experiment power_worst_case --out cli_test_out/power");
    expect(r.exit_code == 0, "single experiment exits 0");
    expect(fs::exists("cli_test_out/power/summary.json"), "summary.json is written");
    expect(r.output.find("PASS power_worst_case") != std::string::npos,
           "experiment prints a PASS line");
    expect(fs::exists("cli_test_out/mvm/mvm.program.json"), "mvm emits its program report");
  }
  {
    const RunResult r = run("CROSSTACK_OUT=cli_test_out/envdir " + bin +
                            " experiment power_worst_case");
    expect(r.exit_code == 0, "experiment honors $CROSSTACK_OUT");
    expect(fs::exists("cli_test_out/envdir/summary.json"),
           "outputs land under $CROSSTACK_OUT when --out is absent");
  }
  {
    Eigen::MatrixXd weights = Eigen::MatrixXd::Constant(4, 3, 0.5);
    crosstack::write_csv("cli_test_out/dn_weights.csv", "w", weights);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Constant(4, 1, 0.1);
    crosstack::write_csv("cli_test_out/dn_inputs.csv", "v", inputs);
    const RunResult r = run(bin +
                            " mvm --weights cli_test_out/dn_weights.csv"
                            " --inputs cli_test_out/dn_inputs.csv --mode deepnet"
                            " --out cli_test_out/dn");
    expect(r.exit_code == 0, "deep-net mvm runs");
    expect(fs::exists("cli_test_out/dn/mvm.columns.csv"), "deep-net mvm writes columns");

    Eigen::MatrixXd short_inputs = Eigen::MatrixXd::Constant(3, 1, 0.1);
    crosstack::write_csv("cli_test_out/short_inputs.csv", "v", short_inputs);
    const RunResult bad = run(bin +
                              " mvm --weights cli_test_out/dn_weights.csv"
                              " --inputs cli_test_out/short_inputs.csv --mode deepnet"
                              " --out cli_test_out/dn_bad");
    expect(bad.exit_code == 2, "input-count mismatch exits 2");
  }
  {
    // A failing reproduction must exit 1: zero variation cannot reproduce
    // the 8% deviation figure.
    const RunResult r = run(bin +
                            " --override device.sigma_reset=0 --override device.sigma_set=0"
                            " experiment transient_read --out cli_test_out/fail");
    expect(r.exit_code == 1, "failed reproduction exits 1");
    expect(r.output.find("FAIL") != std::string::npos, "failure is printed");
  }

  if (g_failures == 0) {
    std::cout << "cli: all checks passed\n";
    return 0;
  }
  std::cout << "cli: " << g_failures << " check(s) FAILED\n";
  return 1;
}
