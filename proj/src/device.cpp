#include "crosstack/device.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace crosstack {

namespace {

// Box-Muller on top of mt19937_64 with an explicit [0,1) mapping, so the
// sampled sequences do not depend on the standard library's
// normal_distribution implementation.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), never log(0)
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

double truncated_gaussian(GaussianSampler& g, double nominal, double rel_sigma) {
  if (rel_sigma == 0.0) return nominal;
  const double lo = 0.5 * nominal;
  const double hi = 1.5 * nominal;
  for (;;) {
    const double v = nominal * (1.0 + rel_sigma * g.next());
    if (v >= lo && v <= hi) return v;
  }
}

}  // namespace

void DeviceParams::validate() const {
  if (!(r_set > 0.0) || !(r_reset > r_set))
    throw std::invalid_argument("device: requires r_reset > r_set > 0");
  if (!(sigma_set >= 0.0 && sigma_set < 0.5) || !(sigma_reset >= 0.0 && sigma_reset < 0.5))
    throw std::invalid_argument("device: requires 0 <= sigma_set, sigma_reset < 0.5");
  if (!(v_th > 0.0) || !(v_write > v_th))
    throw std::invalid_argument("device: requires v_write > v_th > 0");
  if (!(t_write_full > 0.0))
    throw std::invalid_argument("device: requires t_write_full > 0");
  if (polarity != 1 && polarity != -1)
    throw std::invalid_argument("device: polarity must be +1 or -1");
}

std::vector<DeviceInstance> sample_devices(const DeviceParams& params, int count,
                                           std::uint64_t seed) {
  params.validate();
  if (count < 1) throw std::invalid_argument("sample_devices: count must be >= 1");
  GaussianSampler g(seed);
  std::vector<DeviceInstance> out(static_cast<std::size_t>(count));
  for (auto& inst : out) {
    inst.r_set = truncated_gaussian(g, params.r_set, params.sigma_set);
    inst.r_reset = truncated_gaussian(g, params.r_reset, params.sigma_reset);
    inst.state = 0.0;
    inst.params = params;
  }
  return out;
}

double conductance(const DeviceInstance& inst) {
  return inst.state / inst.r_set + (1.0 - inst.state) / inst.r_reset;
}

DeviceInstance apply_pulse(DeviceInstance inst, double v, double dt) {
  if (dt < 0.0) throw std::invalid_argument("apply_pulse: dt must be non-negative");
  const DeviceParams& p = inst.params;
  const double mag = std::abs(v);
  if (mag <= p.v_th) return inst;  // sub-threshold retention
  // Factored so a full (v_write, t_write_full) pulse yields delta == 1 exactly.
  const double delta = ((mag - p.v_th) * dt) / ((p.v_write - p.v_th) * p.t_write_full);
  const double dir = (p.polarity * v > 0.0) ? 1.0 : -1.0;
  inst.state = std::clamp(inst.state + dir * delta, 0.0, 1.0);
  return inst;
}

Eigen::MatrixX2d iv_trace(DeviceInstance inst,
                          const Eigen::Ref<const Eigen::VectorXd>& times,
                          const Eigen::Ref<const Eigen::VectorXd>& volts) {
  if (times.size() != volts.size())
    throw std::invalid_argument("iv_trace: time and voltage lengths differ");
  const Eigen::Index n = times.size();
  Eigen::MatrixX2d trace(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k > 0) {
      const double dt = times(k) - times(k - 1);
      if (!(dt > 0.0))
        throw std::invalid_argument("iv_trace: times must be strictly increasing");
      inst = apply_pulse(inst, 0.5 * (volts(k - 1) + volts(k)), dt);
    }
    trace(k, 0) = volts(k);
    trace(k, 1) = volts(k) * conductance(inst);
  }
  return trace;
}

}  // namespace crosstack
