#pragma once

#include <vector>

#include <Eigen/Core>

#include "crosstack/fabric.hpp"

namespace crosstack {

// Conductance targets evenly spaced between the reset and set states.
// round(2^bits_per_cell) levels; multi-cell weights require 1-bit cells.
struct QuantScheme {
  double bits_per_cell = 1.0;  // one of 1, 2, 3, 3.5
  int cells_per_weight = 1;
  Eigen::VectorXd g_levels;  // S, strictly increasing
};

QuantScheme make_quant_scheme(double bits_per_cell, int cells_per_weight,
                              const DeviceParams& params);

struct QuantAssignment {
  int rows = 0;
  int cols = 0;
  std::vector<Eigen::MatrixXd> slices;  // conductance targets, slices[0] = MSB
  Eigen::MatrixXd reconstructed;        // weights implied by the assignment
  double max_weight_error = 0.0;
};

// Maps normalized weights in [0, 1] onto per-cell conductance targets.
// Single-cell weights snap to the nearest quantization level; k 1-bit cells
// carry the binary expansion of round(w * 2^k) with positional significance
// 2^(k-1)..1 over 2^k.
QuantAssignment quantize(const Eigen::Ref<const Eigen::MatrixXd>& weights,
                         const QuantScheme& scheme);

// Continuous (non-quantized) map g = g_reset + w*(g_set - g_reset).
Eigen::MatrixXd weights_to_conductance(const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                       const DeviceParams& params);

struct ProgramReport {
  double total_time = 0.0;     // s, rows_programmed * t_write_full
  double total_energy = 0.0;   // J, sum of v^2*g over all pulses
  Eigen::MatrixXd achieved_g;  // S
  double max_rel_error = 0.0;  // achieved vs requested conductance
  int pulses = 0;
  int rows_programmed = 0;
};

// Programs one write-biased layer to the target conductances with a
// row-sequential, column-parallel pulse schedule. Pulse lengths are chosen
// from the linear drift law, so each device lands on its target state.
// Programming a read-enabled layer throws ModeViolationError.
ProgramReport program(Fabric& fabric, int layer,
                      const Eigen::Ref<const Eigen::MatrixXd>& targets);

struct AdcModel {
  int input_bits = 7;                 // DAC resolution of the read levels
  double v_read_max = 0.5;            // V, read full scale
  int output_bits = 8;
  double full_scale_current = 10e-6;  // A
};

// v_read_max / 2^input_bits.
double input_lsb(double v_read_max, int input_bits);

// Digitized read of the read-enabled layer(s): solves the fabric with the
// given read voltages on the read rows (write-biased rows held quiescent)
// and uniformly quantizes the column currents. Device states are never
// modified. Read amplitudes at or above the switching threshold throw
// ReadDisturbError unless explicitly allowed.
Eigen::VectorXi readout(const Fabric& fabric,
                        const Eigen::Ref<const Eigen::VectorXd>& v_inputs,
                        const AdcModel& adc, bool allow_above_threshold = false);

// log2(1/rel_error) floored to the nearest half bit.
double effective_bits(double rel_error);

}  // namespace crosstack
