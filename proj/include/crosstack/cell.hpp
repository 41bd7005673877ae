#pragma once

#include <span>

#include "crosstack/device.hpp"

namespace crosstack {

inline constexpr double kSupplyVoltage = 1.8;  // V_DD

struct TransistorParams {
  double r_on = 1.0e3;           // ohm, on-state switch resistance
  double g_off = 2.5e-12 / 1.2;  // S, off-state leakage conductance
  double w_over_l = 2.5;         // sizing ratio, documentation only

  void validate() const;
};

// Memristor-CMOS hybrid cell. RE high routes the memristor through N1 to
// the shared column; RE low routes it through N2 to local ground. The
// deselected switch is modeled as a leakage conductance between the row
// input and the deselected rail: the series memristance (<=100 kohm) is
// negligible against 1/g_off (~5e11 ohm) and is absorbed into the g_off
// calibration.
struct CellInstance {
  DeviceInstance device;
  TransistorParams n1;  // read-path switch (to shared column)
  TransistorParams n2;  // write-path switch (to local ground)
  int row = 0;
  int col = 0;
  int layer = 0;
};

struct BranchCurrents {
  double i_col = 0.0;   // A, into the shared column
  double i_gnd = 0.0;   // A, into local ground
  double i_leak = 0.0;  // A, off-path component
};

// Quasi-static branch currents for one cell. Row current equals
// i_col + i_gnd exactly. Voltages must stay within +/-V_DD.
BranchCurrents branch_currents(const CellInstance& cell, double v_row, double v_col,
                               bool re_high);

// Sum of off-path leakage into the shared column over a group of
// write-biased (RE low) cells at the given row bias. Empty input returns 0.
double column_leakage(std::span<const CellInstance> cells, double v_write);

}  // namespace crosstack
