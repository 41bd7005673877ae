#pragma once

#include <iosfwd>
#include <vector>

#include "crosstack/fabric.hpp"

namespace crosstack {

struct TimingParams {
  double t_read = 10e-9;         // s, current read-out time
  double t_write_unit = 25e-9;   // s, programming slot per pipeline step
  double t_write_full = 250e-9;  // s, device full-switch time

  void validate() const;  // all > 0 and t_read < t_write_unit
};

enum class EventKind { Read, Write };

struct TimelineEvent {
  double t_start = 0.0;  // s
  double t_end = 0.0;    // s
  EventKind kind = EventKind::Read;
  int physical_layer = 0;
  int network_layer = 0;  // 0-based
};

struct Timeline {
  std::vector<TimelineEvent> events;
  double total() const;  // span from first start to last end, 0 when empty
};

struct ModeState {
  Mode mode = Mode::Expansion;
  bool re_layer0 = true;
  bool re_layer1 = true;
};

// ok exactly when the RE assignment satisfies the mode invariant; otherwise
// throws ModeViolationError naming the offending layer pair.
void validate_mode(const ModeState& state);

// Write/read schedule for L consecutive network layers.
//
// Planar/expansion baseline is strictly sequential on physical layer 0:
// total = L*(t_write_unit + t_read). Deep-net alternates physical layers,
// overlapping network layer k's read with layer k+1's write on the other
// layer; the read is subsumed in the write slot, so
// total = L*t_write_unit + t_read.
Timeline plan(Mode mode, int num_network_layers, const TimingParams& timing);

// 1 - total(deepnet)/total(baseline).
double speedup(const Timeline& deepnet, const Timeline& baseline);

// Large-L limit of the deep-net speedup: t_read/(t_write_unit + t_read).
double asymptotic_speedup(const TimingParams& timing);

// Rows feeding one MVM in the given mode: 2n for expansion (both stacked
// layers share the columns), n otherwise.
int effective_rows(Mode mode, const FabricGeometry& geom);

// CSV export: t_start_ns, t_end_ns, kind, physical_layer, network_layer.
void write_timeline_csv(const Timeline& timeline, std::ostream& os);

}  // namespace crosstack
