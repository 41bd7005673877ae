#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crosstack/config.hpp"

namespace crosstack {

struct Measurement {
  std::string name;
  double value = 0.0;
  std::string unit;
  double target = 0.0;
  double tolerance = 0.0;
  // "relative": |v-t| <= tol*|t|; "absolute": |v-t| <= tol;
  // "at_most": v <= t; "at_least": v >= t.
  std::string tolerance_kind = "relative";
  bool pass = false;
};

struct NamedValue {
  std::string name;
  double value = 0.0;
  std::string unit;
};

struct ExperimentReport {
  std::string name;
  std::vector<Measurement> measurements;
  std::vector<NamedValue> values;  // informational, not checked
  bool pass = false;               // all measurements pass
  double runtime = 0.0;            // s, console only; kept out of files
  std::uint64_t seed = 0;
  std::string note;
};

bool measurement_passes(const Measurement& m);

// Reference experiments. Each writes its CSV data files and
// <name>.report.json under out_dir and returns the report. All are
// deterministic for a fixed config seed.
ExperimentReport ir_drop_experiment(const RunConfig& config,
                                    const std::filesystem::path& out_dir);
ExperimentReport leakage_mc(const RunConfig& config, const std::filesystem::path& out_dir);
ExperimentReport transient_read(const RunConfig& config,
                                const std::filesystem::path& out_dir);
ExperimentReport power_worst_case(const RunConfig& config,
                                  const std::filesystem::path& out_dir);
ExperimentReport hysteresis_experiment(const RunConfig& config,
                                       const std::filesystem::path& out_dir);

const std::vector<std::string>& experiment_names();
ExperimentReport run_experiment(const std::string& name, const RunConfig& config,
                                const std::filesystem::path& out_dir);

void write_report_json(const ExperimentReport& report, const std::filesystem::path& file);

// Total static dissipation of `devices` identical resistances at bias v.
double dissipated_power(int devices, double v, double resistance);

}  // namespace crosstack
