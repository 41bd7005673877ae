#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "crosstack/cell.hpp"
#include "crosstack/engine.hpp"
#include "crosstack/fabric.hpp"
#include "crosstack/pipeline.hpp"

namespace crosstack {

// Every simulator knob with its default. A fully defaulted config carries
// the characterized chip values and reproduces the reference experiments
// unchanged.
struct RunConfig {
  DeviceParams device;
  TransistorParams transistor;  // applied to both N1 and N2
  FabricGeometry geometry;
  bool re_layer0 = true;
  bool re_layer1 = true;
  double t_read = 10e-9;        // s
  double t_write_unit = 25e-9;  // s, pipeline programming slot
  double quant_bits_per_cell = 1.0;
  int quant_cells_per_weight = 1;
  AdcModel adc;
  double v_read = 0.39;  // V, default read amplitude, kept under v_th
  bool allow_read_disturb = false;
  int trials = 200;        // Monte Carlo population
  double sweep_v_max = 1.2;  // V, DC sweep upper end
  int sweep_points = 25;
  double probe_v = 4e-3;  // V, single-cell read probe level
  int transient_steps = 10;
  double hysteresis_amplitude = 1.2;  // V, 50 Hz drive level
  std::uint64_t seed = 42;
  std::string out_dir;

  TimingParams timing() const {
    return TimingParams{t_read, t_write_unit, device.t_write_full};
  }
  void validate() const;
};

// key = value sections. Unknown keys are rejected with the list of valid
// keys; unspecified keys keep their defaults.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);  // parse + validate

// "section.key=value", the CLI --override form.
void apply_override(RunConfig& config, const std::string& assignment);

// Full-precision echo of every key; re-parsing reproduces the config.
std::string config_to_text(const RunConfig& config);
void write_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace crosstack
