#include "crosstack/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crosstack {

namespace {

bool valid_bits(double bits) {
  return bits == 1.0 || bits == 2.0 || bits == 3.0 || bits == 3.5;
}

}  // namespace

QuantScheme make_quant_scheme(double bits_per_cell, int cells_per_weight,
                              const DeviceParams& params) {
  params.validate();
  if (!valid_bits(bits_per_cell))
    throw std::invalid_argument("quant: bits_per_cell must be one of 1, 2, 3, 3.5");
  if (cells_per_weight < 1)
    throw std::invalid_argument("quant: cells_per_weight must be >= 1");
  if (cells_per_weight > 1 && bits_per_cell != 1.0)
    throw std::invalid_argument("quant: multi-cell weights require 1-bit cells");
  QuantScheme scheme;
  scheme.bits_per_cell = bits_per_cell;
  scheme.cells_per_weight = cells_per_weight;
  const int levels = static_cast<int>(std::lround(std::pow(2.0, bits_per_cell)));
  const double g_r = 1.0 / params.r_reset;
  const double g_s = 1.0 / params.r_set;
  scheme.g_levels = Eigen::VectorXd::LinSpaced(levels, g_r, g_s);
  return scheme;
}

QuantAssignment quantize(const Eigen::Ref<const Eigen::MatrixXd>& weights,
                         const QuantScheme& scheme) {
  if (scheme.g_levels.size() < 2)
    throw std::invalid_argument("quantize: scheme has no levels (use make_quant_scheme)");
  if ((weights.array() < 0.0).any() || (weights.array() > 1.0).any())
    throw std::invalid_argument("quantize: weights must lie in [0, 1]");
  const double g_r = scheme.g_levels(0);
  const double g_s = scheme.g_levels(scheme.g_levels.size() - 1);
  QuantAssignment out;
  out.rows = static_cast<int>(weights.rows());
  out.cols = static_cast<int>(weights.cols());
  out.reconstructed.resize(weights.rows(), weights.cols());

  if (scheme.cells_per_weight == 1) {
    Eigen::MatrixXd slice(weights.rows(), weights.cols());
    const int levels = static_cast<int>(scheme.g_levels.size());
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
      for (Eigen::Index j = 0; j < weights.cols(); ++j) {
        const int idx = std::clamp(
            static_cast<int>(std::lround(weights(i, j) * (levels - 1))), 0, levels - 1);
        slice(i, j) = scheme.g_levels(idx);
        out.reconstructed(i, j) = static_cast<double>(idx) / (levels - 1);
      }
    out.slices.push_back(std::move(slice));
  } else {
    const int k = scheme.cells_per_weight;
    const double denom = std::ldexp(1.0, k);  // 2^k
    out.slices.assign(static_cast<std::size_t>(k),
                      Eigen::MatrixXd(weights.rows(), weights.cols()));
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
      for (Eigen::Index j = 0; j < weights.cols(); ++j) {
        const long code = std::clamp<long>(std::lround(weights(i, j) * denom), 0,
                                           static_cast<long>(denom) - 1);
        for (int s = 0; s < k; ++s) {
          const bool bit = (code >> (k - 1 - s)) & 1;
          out.slices[static_cast<std::size_t>(s)](i, j) = bit ? g_s : g_r;
        }
        out.reconstructed(i, j) = static_cast<double>(code) / denom;
      }
  }
  out.max_weight_error = (weights - out.reconstructed).cwiseAbs().maxCoeff();
  return out;
}

Eigen::MatrixXd weights_to_conductance(const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                       const DeviceParams& params) {
  params.validate();
  if ((weights.array() < 0.0).any() || (weights.array() > 1.0).any())
    throw std::invalid_argument("weights_to_conductance: weights must lie in [0, 1]");
  const double g_r = 1.0 / params.r_reset;
  const double g_s = 1.0 / params.r_set;
  return (g_r + (weights.array() * (g_s - g_r))).matrix();
}

ProgramReport program(Fabric& fabric, int layer,
                      const Eigen::Ref<const Eigen::MatrixXd>& targets) {
  if (layer < 0 || layer >= fabric.num_layers())
    throw std::invalid_argument("program: layer index out of range");
  if (fabric.read_enable(layer))
    throw ModeViolationError("mode violation: cannot program layer " + std::to_string(layer) +
                             " while it is read-enabled (RE must be low to write)");
  CellArray& arr = fabric.layer(layer);
  if (targets.rows() != arr.rows || targets.cols() != arr.cols)
    throw std::invalid_argument("program: target matrix does not match layer dimensions");

  ProgramReport report;
  report.achieved_g.resize(targets.rows(), targets.cols());
  double t_write_full = 0.0;
  for (int i = 0; i < arr.rows; ++i) {
    bool row_active = false;
    for (int j = 0; j < arr.cols; ++j) {
      CellInstance& cell = arr.at(i, j);
      const DeviceParams& p = cell.device.params;
      t_write_full = p.t_write_full;
      const double g_nom_lo = 1.0 / p.r_reset;
      const double g_nom_hi = 1.0 / p.r_set;
      const double target = targets(i, j);
      if (target < g_nom_lo * (1.0 - 1e-9) || target > g_nom_hi * (1.0 + 1e-9))
        throw std::invalid_argument("program: target conductance outside [g_reset, g_set]");
      const double g_lo = 1.0 / cell.device.r_reset;  // sampled range
      const double g_hi = 1.0 / cell.device.r_set;
      const double x_target = std::clamp((target - g_lo) / (g_hi - g_lo), 0.0, 1.0);
      const double dx = x_target - cell.device.state;
      if (std::abs(dx) > 1e-12) {
        const double v = (dx > 0 ? 1.0 : -1.0) * p.polarity * p.v_write;
        const double dt = std::abs(dx) * p.t_write_full;
        const double g_before = conductance(cell.device);
        cell.device = apply_pulse(cell.device, v, dt);
        const double g_after = conductance(cell.device);
        // v^2 * g integrated over the pulse; g is linear in t.
        report.total_energy += p.v_write * p.v_write * 0.5 * (g_before + g_after) * dt;
        report.pulses += 1;
        row_active = true;
      }
      report.achieved_g(i, j) = conductance(cell.device);
      const double err = std::abs(report.achieved_g(i, j) - target) / target;
      report.max_rel_error = std::max(report.max_rel_error, err);
    }
    if (row_active) report.rows_programmed += 1;
  }
  report.total_time = report.rows_programmed * t_write_full;
  return report;
}

double input_lsb(double v_read_max, int input_bits) {
  if (input_bits < 1) throw std::invalid_argument("input_lsb: input_bits must be >= 1");
  if (!(v_read_max > 0.0)) throw std::invalid_argument("input_lsb: v_read_max must be > 0");
  return std::ldexp(v_read_max, -input_bits);
}

Eigen::VectorXi readout(const Fabric& fabric,
                        const Eigen::Ref<const Eigen::VectorXd>& v_inputs,
                        const AdcModel& adc, bool allow_above_threshold) {
  if (adc.output_bits < 1 || adc.input_bits < 1)
    throw std::invalid_argument("readout: ADC resolutions must be >= 1 bit");
  if (!(adc.full_scale_current > 0.0))
    throw std::invalid_argument("readout: ADC full-scale current must be > 0");

  std::vector<int> read_layers;
  for (int l = 0; l < fabric.num_layers(); ++l)
    if (fabric.read_enable(l)) read_layers.push_back(l);
  if (read_layers.empty())
    throw ModeViolationError(
        "mode violation: readout requires at least one read-enabled layer");

  const int n = fabric.geometry().rows_per_layer;
  if (v_inputs.size() != static_cast<Eigen::Index>(read_layers.size()) * n)
    throw std::invalid_argument("readout: expected " +
                                std::to_string(read_layers.size() * n) + " read voltages");
  for (Eigen::Index i = 0; i < v_inputs.size(); ++i) {
    const double mag = std::abs(v_inputs(i));
    if (mag > adc.v_read_max)
      throw std::invalid_argument("readout: input exceeds the read full scale");
    const int l = read_layers[static_cast<std::size_t>(i) / n];
    const double v_th = fabric.layer(l).cells.front().device.params.v_th;
    if (mag > v_th && !allow_above_threshold)
      throw ReadDisturbError("read disturb: amplitude " + std::to_string(mag) +
                             " V exceeds the switching threshold " + std::to_string(v_th) +
                             " V; refusing to corrupt stored weights");
  }

  Eigen::VectorXd full = Eigen::VectorXd::Zero(fabric.num_inputs());
  for (std::size_t k = 0; k < read_layers.size(); ++k)
    full.segment(read_layers[k] * n, n) = v_inputs.segment(static_cast<Eigen::Index>(k) * n, n);

  const SolveResult solved = solve_dc(fabric.netlist(), full);
  const long max_code = (1L << adc.output_bits) - 1;
  Eigen::VectorXi codes(solved.column_currents.size());
  for (Eigen::Index j = 0; j < codes.size(); ++j) {
    const long code = std::lround(solved.column_currents(j) / adc.full_scale_current *
                                  static_cast<double>(max_code));
    codes(j) = static_cast<int>(std::clamp(code, 0L, max_code));
  }
  return codes;
}

double effective_bits(double rel_error) {
  if (!(rel_error > 0.0) || !(rel_error < 1.0))
    throw std::invalid_argument("effective_bits: rel_error must lie in (0, 1)");
  return std::floor(std::log2(1.0 / rel_error) * 2.0) / 2.0;
}

}  // namespace crosstack
