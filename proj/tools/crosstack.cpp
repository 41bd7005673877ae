#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "crosstack/config.hpp"
#include "crosstack/csv.hpp"
#include "crosstack/engine.hpp"
#include "crosstack/experiments.hpp"
#include "crosstack/pipeline.hpp"

namespace {

using namespace crosstack;

std::filesystem::path resolve_out_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("CROSSTACK_OUT"); env != nullptr && *env != '\0')
    return env;
  return "crosstack_out";
}

// Column-current CSV in the documented (column_index, current_A) format.
void write_column_csv(const std::filesystem::path& path, const Eigen::VectorXd& currents) {
  Eigen::MatrixXd table(currents.size(), 2);
  for (Eigen::Index j = 0; j < currents.size(); ++j) {
    table(j, 0) = static_cast<double>(j);
    table(j, 1) = currents(j);
  }
  write_csv(path, "column_index,current_A", table);
}

int run_experiments(const RunConfig& cfg, const std::filesystem::path& out,
                    const std::string& which) {
  std::filesystem::create_directories(out);
  write_config(cfg, out / "effective_config.ini");
  std::vector<std::string> names;
  if (which == "all")
    names = experiment_names();
  else
    names.push_back(which);

  nlohmann::ordered_json summary;
  summary["seed"] = cfg.seed;
  summary["experiments"] = nlohmann::ordered_json::array();
  bool all_pass = true;
  for (const std::string& name : names) {
    const ExperimentReport report = run_experiment(name, cfg, out);
    all_pass = all_pass && report.pass;
    nlohmann::ordered_json e;
    e["name"] = report.name;
    e["pass"] = report.pass;
    summary["experiments"].push_back(e);
    std::cout << (report.pass ? "PASS" : "FAIL") << ' ' << report.name;
    for (const Measurement& m : report.measurements)
      std::cout << "  " << m.name << '=' << m.value;
    std::cout << "  (" << report.runtime << " s)\n";
  }
  summary["all_pass"] = all_pass;
  write_text_atomic(out / "summary.json", summary.dump(2) + "\n");
  std::cout << (all_pass ? "all experiments passed" : "one or more experiments FAILED")
            << '\n';
  return all_pass ? 0 : 1;
}

int run_mvm(const RunConfig& cfg, const std::filesystem::path& out,
            const std::string& weights_path, const std::string& inputs_path,
            const std::string& mode_str, const std::string& netlist_path) {
  const Mode mode = mode_from_string(mode_str);
  const Eigen::MatrixXd weights = read_csv_matrix(weights_path);
  const Eigen::MatrixXd inputs_raw = read_csv_matrix(inputs_path);
  Eigen::VectorXd inputs;
  if (inputs_raw.cols() == 1)
    inputs = inputs_raw.col(0);
  else if (inputs_raw.rows() == 1)
    inputs = inputs_raw.row(0).transpose();
  else
    throw std::invalid_argument("mvm: inputs file must hold a single row or column");

  FabricGeometry geom = cfg.geometry;
  geom.mode = mode;
  geom.cols = static_cast<int>(weights.cols());
  if (mode == Mode::Expansion) {
    if (weights.rows() % 2 != 0)
      throw std::invalid_argument("mvm: expansion mode needs an even weight row count");
    geom.layers = 2;
    geom.rows_per_layer = static_cast<int>(weights.rows()) / 2;
  } else if (mode == Mode::DeepNet) {
    geom.layers = 2;
    geom.rows_per_layer = static_cast<int>(weights.rows());
  } else {
    geom.layers = 1;
    geom.rows_per_layer = static_cast<int>(weights.rows());
  }
  if (inputs.size() != effective_rows(mode, geom))
    throw std::invalid_argument("mvm: expected " +
                                std::to_string(effective_rows(mode, geom)) +
                                " inputs for this mode, got " + std::to_string(inputs.size()));

  Fabric fabric = make_fabric(geom, cfg.device, cfg.transistor, cfg.transistor, cfg.seed);
  const Eigen::MatrixXd targets = weights_to_conductance(weights, cfg.device);

  // Write bias, program, then flip to the mode's read bias.
  Eigen::MatrixXd achieved(weights.rows(), weights.cols());
  std::vector<std::pair<int, ProgramReport>> programmed;
  const int n = geom.rows_per_layer;
  if (mode == Mode::Expansion) {
    fabric.set_read_enable(false, false);
    programmed.emplace_back(0, program(fabric, 0, targets.topRows(n)));
    programmed.emplace_back(1, program(fabric, 1, targets.bottomRows(n)));
    achieved.topRows(n) = programmed[0].second.achieved_g;
    achieved.bottomRows(n) = programmed[1].second.achieved_g;
    fabric.set_read_enable(true, true);
  } else if (mode == Mode::DeepNet) {
    fabric.set_read_enable(false, true);
    programmed.emplace_back(0, program(fabric, 0, targets));
    achieved = programmed[0].second.achieved_g;
    fabric.set_read_enable(true, false);
  } else {
    fabric.set_read_enable(false, false);
    programmed.emplace_back(0, program(fabric, 0, targets));
    achieved = programmed[0].second.achieved_g;
    fabric.set_read_enable(true, true);
  }

  Eigen::VectorXd full = Eigen::VectorXd::Zero(fabric.num_inputs());
  if (mode == Mode::DeepNet)
    full.head(n) = inputs;  // write layer rows quiescent
  else
    full = inputs;
  const Netlist net = fabric.netlist();
  const SolveResult solved = solve_dc(net, full);
  const Eigen::VectorXd ideal = ideal_mvm(inputs, achieved);

  std::filesystem::create_directories(out);
  write_config(cfg, out / "effective_config.ini");
  write_column_csv(out / "mvm.columns.csv", solved.column_currents);
  write_column_csv(out / "mvm.ideal.csv", ideal);
  write_csv(out / "mvm.achieved_g.csv", "achieved_conductance_S", achieved);
  {
    nlohmann::ordered_json pj;
    pj["layers"] = nlohmann::ordered_json::array();
    for (const auto& [layer, report] : programmed) {
      nlohmann::ordered_json lj;
      lj["layer"] = layer;
      lj["total_time_s"] = report.total_time;
      lj["total_energy_J"] = report.total_energy;
      lj["pulses"] = report.pulses;
      lj["rows_programmed"] = report.rows_programmed;
      lj["max_rel_error"] = report.max_rel_error;
      pj["layers"].push_back(lj);
    }
    write_text_atomic(out / "mvm.program.json", pj.dump(2) + "\n");
  }
  if (!netlist_path.empty()) {
    std::ostringstream os;
    net.export_branches(os);
    write_text_atomic(netlist_path, os.str());
  }

  std::cout << "column_index,solved_A,ideal_A\n";
  for (Eigen::Index j = 0; j < solved.column_currents.size(); ++j)
    std::cout << j << ',' << format_sci(solved.column_currents(j)) << ','
              << format_sci(ideal(j)) << '\n';
  return 0;
}

int run_plan(const RunConfig& cfg, const std::filesystem::path& out, int layers,
             const std::string& mode_str) {
  const Mode mode = mode_from_string(mode_str);
  const TimingParams timing = cfg.timing();
  const Timeline timeline = plan(mode, layers, timing);
  std::filesystem::create_directories(out);
  {
    std::ostringstream os;
    write_timeline_csv(timeline, os);
    write_text_atomic(out / "plan.timeline.csv", os.str());
  }
  std::cout << "mode=" << to_string(mode) << " layers=" << layers
            << " total=" << timeline.total() * 1e9 << " ns\n";
  if (mode == Mode::DeepNet) {
    const Timeline baseline = plan(Mode::Planar, layers, timing);
    std::cout << "baseline total=" << baseline.total() * 1e9 << " ns"
              << " speedup=" << speedup(timeline, baseline) * 100.0 << "%"
              << " asymptotic=" << asymptotic_speedup(timing) * 100.0 << "%\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CrossStack: stacked memristor crossbar inference engine simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, out_flag;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "configuration file (key = value sections)");
  app.add_option("--out", out_flag, "output directory (falls back to $CROSSTACK_OUT)");
  auto* seed_opt = app.add_option("--seed", seed, "Monte Carlo seed override");
  app.add_option("--override", overrides, "section.key=value config override (repeatable)");

  auto* exp_cmd = app.add_subcommand("experiment", "run a reference experiment");
  std::string exp_name = "all";
  exp_cmd->add_option("name", exp_name,
                      "experiment name or 'all' (ir_drop, leakage_mc, transient_read, "
                      "power_worst_case, hysteresis)");

  auto* mvm_cmd = app.add_subcommand("mvm", "program weights and solve one matrix-vector product");
  std::string weights_path, inputs_path, mvm_mode = "expansion", netlist_path;
  mvm_cmd->add_option("--weights", weights_path, "weight matrix CSV, row-major in [0,1]")
      ->required();
  mvm_cmd->add_option("--inputs", inputs_path, "input voltage vector CSV")->required();
  mvm_cmd->add_option("--mode", mvm_mode, "planar|expansion|deepnet");
  mvm_cmd->add_option("--netlist", netlist_path, "also export the branch list to this file");

  auto* plan_cmd = app.add_subcommand("plan", "emit a read/write pipeline schedule");
  int plan_layers = 1;
  std::string plan_mode = "deepnet";
  plan_cmd->add_option("--layers", plan_layers, "number of network layers")->required();
  plan_cmd->add_option("--mode", plan_mode, "planar|expansion|deepnet");

  auto* val_cmd = app.add_subcommand("validate-config", "parse and validate the configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    for (const std::string& ov : overrides) apply_override(cfg, ov);
    cfg.validate();
    const std::filesystem::path out = resolve_out_dir(out_flag, cfg);

    if (*exp_cmd) return run_experiments(cfg, out, exp_name);
    if (*mvm_cmd) return run_mvm(cfg, out, weights_path, inputs_path, mvm_mode, netlist_path);
    if (*plan_cmd) return run_plan(cfg, out, plan_layers, plan_mode);
    if (*val_cmd) {
      std::cout << "config OK\n" << config_to_text(cfg);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
