#include "crosstack/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace crosstack {

void TimingParams::validate() const {
  if (!(t_read > 0.0) || !(t_write_unit > 0.0) || !(t_write_full > 0.0))
    throw std::invalid_argument("timing: all times must be > 0");
  if (!(t_read < t_write_unit))
    throw std::invalid_argument("timing: requires t_read < t_write_unit for read subsumption");
}

double Timeline::total() const {
  if (events.empty()) return 0.0;
  double start = events.front().t_start;
  double end = events.front().t_end;
  for (const TimelineEvent& e : events) {
    start = std::min(start, e.t_start);
    end = std::max(end, e.t_end);
  }
  return end - start;
}

void validate_mode(const ModeState& state) {
  validate_read_enable(state.mode, state.re_layer0, state.re_layer1);
}

Timeline plan(Mode mode, int num_network_layers, const TimingParams& timing) {
  timing.validate();
  if (num_network_layers < 1)
    throw std::invalid_argument("plan: num_network_layers must be >= 1");
  const double tw = timing.t_write_unit;
  const double tr = timing.t_read;
  Timeline tl;
  if (mode == Mode::DeepNet) {
    // W_k on layer k%2 over [k*tw, (k+1)*tw); R_k follows on the same layer
    // while W_{k+1} runs on the other. RE stays complementary throughout.
    for (int k = 0; k < num_network_layers; ++k) {
      const int phys = k % 2;
      tl.events.push_back({k * tw, (k + 1) * tw, EventKind::Write, phys, k});
      tl.events.push_back({(k + 1) * tw, (k + 1) * tw + tr, EventKind::Read, phys, k});
    }
  } else {
    for (int k = 0; k < num_network_layers; ++k) {
      const double t0 = k * (tw + tr);
      tl.events.push_back({t0, t0 + tw, EventKind::Write, 0, k});
      tl.events.push_back({t0 + tw, t0 + tw + tr, EventKind::Read, 0, k});
    }
  }
  return tl;
}

double speedup(const Timeline& deepnet, const Timeline& baseline) {
  const double base = baseline.total();
  if (!(base > 0.0)) throw std::invalid_argument("speedup: baseline duration must be > 0");
  return 1.0 - deepnet.total() / base;
}

double asymptotic_speedup(const TimingParams& timing) {
  timing.validate();
  return timing.t_read / (timing.t_write_unit + timing.t_read);
}

int effective_rows(Mode mode, const FabricGeometry& geom) {
  geom.validate();
  if ((mode == Mode::Expansion || mode == Mode::DeepNet) && geom.layers != 2)
    throw std::invalid_argument("effective_rows: mode requires a two-layer geometry");
  return mode == Mode::Expansion ? 2 * geom.rows_per_layer : geom.rows_per_layer;
}

void write_timeline_csv(const Timeline& timeline, std::ostream& os) {
  os << "t_start_ns,t_end_ns,kind,physical_layer,network_layer\n";
  char buf[128];
  for (const TimelineEvent& e : timeline.events) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%s,%d,%d\n", e.t_start * 1e9, e.t_end * 1e9,
                  e.kind == EventKind::Read ? "read" : "write", e.physical_layer,
                  e.network_layer);
    os << buf;
  }
}

}  // namespace crosstack
