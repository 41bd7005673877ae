#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace crosstack {

// TiO2/TiO2-x memristor: static set/reset resistances with Gaussian
// variation, a threshold-gated linear drift of the internal state, and
// linear conductance interpolation between the two static states.
//
// The stacked device pairs are fabricated with mirrored polarity, so both
// layers respond identically to row-side voltages; `polarity` is the knob
// for modeling a flipped (non-mirrored) device.
struct DeviceParams {
  double r_set = 10e3;           // ohm, low-resistance (set) state
  double r_reset = 100e3;        // ohm, high-resistance (reset) state
  double sigma_set = 0.07;       // relative one-sigma spread of r_set
  double sigma_reset = 0.10;     // relative one-sigma spread of r_reset
  double v_th = 0.4;             // V, switching threshold (magnitude)
  double v_write = 1.2;          // V, nominal programming voltage
  double t_write_full = 250e-9;  // s, full reset->set switch at v_write
  int polarity = +1;             // +1 or -1

  void validate() const;  // throws std::invalid_argument on a bad field
};

// One sampled device. `state` is the interpolation variable in [0, 1],
// 1 = fully set. Plain value, freely copyable across threads.
struct DeviceInstance {
  double r_set = 10e3;     // ohm, sampled
  double r_reset = 100e3;  // ohm, sampled
  double state = 0.0;
  DeviceParams params;
};

// Draws `count` instances with resistances ~ Normal(nominal, sigma*nominal)
// truncated to [0.5, 1.5] x nominal. Initial state is 0 (reset).
// Bitwise deterministic for a fixed seed, independent of the platform's
// std::normal_distribution.
std::vector<DeviceInstance> sample_devices(const DeviceParams& params, int count,
                                           std::uint64_t seed);

// g = x/r_set + (1 - x)/r_reset, monotone increasing in the state x.
double conductance(const DeviceInstance& inst);

// Threshold drift. |v| <= v_th leaves the state untouched (non-volatile
// retention). Above threshold the state moves toward 1 when polarity*v > 0
// and toward 0 otherwise, at rate (|v| - v_th)/((v_write - v_th)*t_write_full),
// clamped to [0, 1]. A full v_write pulse of t_write_full switches exactly.
DeviceInstance apply_pulse(DeviceInstance inst, double v, double dt);

// Steps the device through (time, voltage) samples, driving the state with
// the midpoint voltage of each interval, and reports (v, i) per sample with
// i = v * conductance(state). Times must be strictly increasing.
Eigen::MatrixX2d iv_trace(DeviceInstance inst,
                          const Eigen::Ref<const Eigen::VectorXd>& times,
                          const Eigen::Ref<const Eigen::VectorXd>& volts);

}  // namespace crosstack
