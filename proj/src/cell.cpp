#include "crosstack/cell.hpp"

#include <cmath>
#include <stdexcept>

namespace crosstack {

void TransistorParams::validate() const {
  if (!(r_on >= 0.0)) throw std::invalid_argument("transistor: requires r_on >= 0");
  if (!(g_off >= 0.0)) throw std::invalid_argument("transistor: requires g_off >= 0");
  if (g_off * r_on > 1e-6)
    throw std::invalid_argument(
        "transistor: requires g_off*r_on <= 1e-6 (off path at least 1e6x weaker)");
}

BranchCurrents branch_currents(const CellInstance& cell, double v_row, double v_col,
                               bool re_high) {
  if (std::abs(v_row) > kSupplyVoltage || std::abs(v_col) > kSupplyVoltage)
    throw std::invalid_argument("branch_currents: bias outside +/-V_DD");
  const double g_m = conductance(cell.device);
  BranchCurrents out;
  if (re_high) {
    const double g_read = 1.0 / (1.0 / g_m + cell.n1.r_on);
    out.i_col = g_read * (v_row - v_col);
    out.i_leak = cell.n2.g_off * v_row;  // N2 off, residual path to local ground
    out.i_gnd = out.i_leak;
  } else {
    const double g_write = 1.0 / (1.0 / g_m + cell.n2.r_on);
    out.i_gnd = g_write * v_row;
    out.i_leak = cell.n1.g_off * (v_row - v_col);  // N1 off, residual path to column
    out.i_col = out.i_leak;
  }
  return out;
}

double column_leakage(std::span<const CellInstance> cells, double v_write) {
  double total = 0.0;
  for (const CellInstance& cell : cells)
    total += branch_currents(cell, v_write, 0.0, /*re_high=*/false).i_leak;
  return total;
}

}  // namespace crosstack
