#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crosstack/cell.hpp"
#include "crosstack/errors.hpp"

namespace crosstack {

enum class Mode { Planar, Expansion, DeepNet };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& name);  // throws on unknown name

// Array dimensions and wiring. r_wire_per_cell is the metal resistance of
// one cell pitch, stamped between adjacent taps on both row and column
// wires. Rows are driven by ideal sources at their first tap. Column
// electrodes are contacted by virtually grounded sense amplifiers at
// sense_contacts (1 or 2) of their end taps; the shared electrode of the
// stacked pair is contacted at both ends by default, sized for the doubled
// read current it carries.
struct FabricGeometry {
  int rows_per_layer = 10;
  int cols = 10;
  int layers = 2;  // 2 required for Expansion and DeepNet
  double r_wire_per_cell = 3.2;  // ohm
  Mode mode = Mode::Expansion;
  int sense_contacts = 2;

  void validate() const;
};

// Row-major grid of one physical layer's cells.
struct CellArray {
  int rows = 0;
  int cols = 0;
  std::vector<CellInstance> cells;

  CellArray() = default;
  CellArray(int rows_, int cols_) : rows(rows_), cols(cols_) {
    cells.resize(static_cast<std::size_t>(rows) * cols);
  }
  CellInstance& at(int i, int j) { return cells[static_cast<std::size_t>(i) * cols + j]; }
  const CellInstance& at(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * cols + j];
  }
};

// Assembled resistive network: a branch list over named nodes plus the
// terminal maps (driven row heads, virtually grounded column contacts).
// Zero-resistance wire segments merge their endpoints exactly rather than
// stamping a large conductance, so the r_wire = 0 limit is bit-exact.
class Netlist {
 public:
  struct Branch {
    int a = 0;
    int b = 0;
    double g = 0.0;  // S, >= 0
  };

  Netlist();

  int add_node(std::string name);
  void add_branch(int a, int b, double g);
  void add_wire(int a, int b, double resistance);  // resistance 0 merges a and b
  void merge(int a, int b);
  void set_driven(int node, int input_index);
  // Holds the node at 0 V as its own fixed class (a virtually grounded
  // sense contact), distinct from the ground return node so contact
  // currents stay attributable.
  void set_grounded(int node);
  void add_column_contact(int column, int node);
  void register_device_branch(int branch_index);

  int ground() const { return ground_; }
  int num_nodes() const { return static_cast<int>(names_.size()); }
  int num_inputs() const { return num_inputs_; }
  int num_columns() const { return static_cast<int>(column_contacts_.size()); }
  int node_class(int node) const;  // representative after zero-wire merging
  const std::string& node_name(int node) const { return names_[static_cast<std::size_t>(node)]; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<int>& device_branches() const { return device_branches_; }
  const std::vector<std::vector<int>>& column_contacts() const { return column_contacts_; }
  const std::vector<std::pair<int, int>>& driven() const { return driven_; }
  const std::vector<int>& grounded() const { return grounded_; }

  // Plain-text export, one "node_a node_b conductance" line per branch.
  void export_branches(std::ostream& os) const;

 private:
  std::vector<std::string> names_;
  std::vector<int> parent_;  // union-find over zero-resistance ties
  std::vector<Branch> branches_;
  std::vector<std::pair<int, int>> driven_;  // (node, input index)
  std::vector<int> grounded_;
  std::vector<std::vector<int>> column_contacts_;
  std::vector<int> device_branches_;
  int ground_ = 0;
  int num_inputs_ = 0;
};

// Throws ModeViolationError naming the offending layer pair unless the
// per-layer read-enable assignment is legal for the mode: expansion
// requires identical RE, deep-net complementary RE.
void validate_read_enable(Mode mode, bool re0, bool re1);

struct SolveResult {
  Eigen::VectorXd node_voltages;    // V per netlist node (merged nodes agree)
  Eigen::VectorXd column_currents;  // A, one per column
  Eigen::VectorXd device_currents;  // A per cell, layer-major row-major
  bool converged = false;
  double residual_norm = 0.0;  // max relative KCL residual over internal nodes
};

// Assembles the crossbar netlist for the geometry, cell grids and per-layer
// read-enable levels. Expansion requires identical RE on both layers,
// deep-net complementary RE; a violation throws ModeViolationError.
// RE-high cells contribute read branches into the shared columns, RE-low
// cells write branches into local ground plus g_off leakage into the
// columns.
Netlist build_netlist(const FabricGeometry& geom, const std::vector<CellArray>& layers,
                      const std::array<bool, 2>& read_enable);

// Direct sparse LDLT solve of the nodal system G v = b. v_inputs holds one
// voltage per driven row, layer-major. Throws SolverError naming a floating
// node if the system is singular.
SolveResult solve_dc(const Netlist& net, const Eigen::Ref<const Eigen::VectorXd>& v_inputs);

// Per-branch currents g*(v_a - v_b) for a solved netlist, aligned with
// net.branches().
Eigen::VectorXd net_branch_currents(const Netlist& net, const SolveResult& result);

// i_j = sum_k v_k G(k, j): the dense product, no circuit effects.
template <typename VDerived, typename GDerived>
Eigen::VectorXd ideal_mvm(const Eigen::MatrixBase<VDerived>& v,
                          const Eigen::MatrixBase<GDerived>& conductance) {
  if (v.size() != conductance.rows())
    throw std::invalid_argument("ideal_mvm: input length must equal conductance rows");
  if ((conductance.derived().array() < 0.0).any())
    throw std::invalid_argument("ideal_mvm: conductances must be non-negative");
  return conductance.transpose() * v.derived();
}

struct IrDropMetric {
  Eigen::VectorXd per_column_loss;  // 1 - i_j / ideal_j
  double worst_loss = 0.0;          // max over columns
};

IrDropMetric ir_drop_metric(const SolveResult& result,
                            const Eigen::Ref<const Eigen::VectorXd>& ideal);

// A stacked pair (or single layer) of cell grids with its mode and RE
// state. Owns the device states that programming mutates; each solve
// assembles a fresh netlist from the current states.
class Fabric {
 public:
  Fabric(FabricGeometry geom, std::vector<CellArray> layers, std::array<bool, 2> read_enable);

  const FabricGeometry& geometry() const { return geom_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  CellArray& layer(int l) { return layers_[static_cast<std::size_t>(l)]; }
  const CellArray& layer(int l) const { return layers_[static_cast<std::size_t>(l)]; }
  bool read_enable(int l) const { return read_enable_[static_cast<std::size_t>(l)]; }
  void set_read_enable(bool re0, bool re1);  // validates against the mode
  int num_inputs() const { return geom_.layers * geom_.rows_per_layer; }
  Netlist netlist() const { return build_netlist(geom_, layers_, read_enable_); }

 private:
  FabricGeometry geom_;
  std::vector<CellArray> layers_;
  std::array<bool, 2> read_enable_{true, true};
};

// Builds a fabric with freshly sampled devices (state 0) and the given
// switch parameters. Default RE: identical high for planar/expansion,
// layer 0 reading for deep-net.
Fabric make_fabric(const FabricGeometry& geom, const DeviceParams& device,
                   const TransistorParams& n1, const TransistorParams& n2,
                   std::uint64_t seed);

}  // namespace crosstack
