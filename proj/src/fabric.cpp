#include "crosstack/fabric.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <sstream>

namespace crosstack {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Planar: return "planar";
    case Mode::Expansion: return "expansion";
    case Mode::DeepNet: return "deepnet";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  if (name == "planar") return Mode::Planar;
  if (name == "expansion") return Mode::Expansion;
  if (name == "deepnet") return Mode::DeepNet;
  throw std::invalid_argument("unknown mode '" + name + "' (planar|expansion|deepnet)");
}

void FabricGeometry::validate() const {
  if (rows_per_layer < 1 || cols < 1)
    throw std::invalid_argument("geometry: requires rows_per_layer >= 1 and cols >= 1");
  if (layers != 1 && layers != 2)
    throw std::invalid_argument("geometry: layers must be 1 or 2");
  if ((mode == Mode::Expansion || mode == Mode::DeepNet) && layers != 2)
    throw std::invalid_argument("geometry: expansion and deep-net modes require layers = 2");
  if (!(r_wire_per_cell >= 0.0))
    throw std::invalid_argument("geometry: requires r_wire_per_cell >= 0");
  if (sense_contacts != 1 && sense_contacts != 2)
    throw std::invalid_argument("geometry: sense_contacts must be 1 or 2");
}

namespace {
const char* level(bool re) { return re ? "high" : "low"; }
}  // namespace

void validate_read_enable(Mode mode, bool re0, bool re1) {
  if (mode == Mode::Expansion && re0 != re1) {
    std::ostringstream os;
    os << "mode violation: expansion mode requires identical read-enable on both layers"
       << " (layer0=" << level(re0) << ", layer1=" << level(re1) << ")";
    throw ModeViolationError(os.str());
  }
  if (mode == Mode::DeepNet && re0 == re1) {
    std::ostringstream os;
    os << "mode violation: deep-net mode requires complementary read-enable signals"
       << " (layer0=" << level(re0) << ", layer1=" << level(re1) << ")";
    throw ModeViolationError(os.str());
  }
}

Netlist::Netlist() { ground_ = add_node("gnd"); }

int Netlist::add_node(std::string name) {
  names_.push_back(std::move(name));
  parent_.push_back(static_cast<int>(names_.size()) - 1);
  return static_cast<int>(names_.size()) - 1;
}

int Netlist::node_class(int node) const {
  // plain walk, no compression: lookups on a shared netlist must stay
  // read-only so independent solves can run in parallel
  int root = node;
  while (parent_[static_cast<std::size_t>(root)] != root)
    root = parent_[static_cast<std::size_t>(root)];
  return root;
}

void Netlist::merge(int a, int b) {
  const int ra = node_class(a);
  const int rb = node_class(b);
  if (ra != rb) parent_[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  // compress while still building (merge is non-const)
  parent_[static_cast<std::size_t>(a)] = std::min(ra, rb);
  parent_[static_cast<std::size_t>(b)] = std::min(ra, rb);
}

void Netlist::add_branch(int a, int b, double g) {
  if (!(g >= 0.0)) throw std::invalid_argument("netlist: branch conductance must be >= 0");
  branches_.push_back(Branch{a, b, g});
}

void Netlist::add_wire(int a, int b, double resistance) {
  if (!(resistance >= 0.0))
    throw std::invalid_argument("netlist: wire resistance must be >= 0");
  if (resistance == 0.0)
    merge(a, b);
  else
    add_branch(a, b, 1.0 / resistance);
}

void Netlist::set_driven(int node, int input_index) {
  driven_.emplace_back(node, input_index);
  num_inputs_ = std::max(num_inputs_, input_index + 1);
}

void Netlist::set_grounded(int node) { grounded_.push_back(node); }

void Netlist::add_column_contact(int column, int node) {
  if (column >= static_cast<int>(column_contacts_.size()))
    column_contacts_.resize(static_cast<std::size_t>(column) + 1);
  column_contacts_[static_cast<std::size_t>(column)].push_back(node);
}

void Netlist::register_device_branch(int branch_index) {
  device_branches_.push_back(branch_index);
}

void Netlist::export_branches(std::ostream& os) const {
  for (const Branch& br : branches_)
    os << names_[static_cast<std::size_t>(br.a)] << ' '
       << names_[static_cast<std::size_t>(br.b)] << ' ' << br.g << '\n';
}

Netlist build_netlist(const FabricGeometry& geom, const std::vector<CellArray>& layers,
                      const std::array<bool, 2>& read_enable) {
  geom.validate();
  if (static_cast<int>(layers.size()) != geom.layers)
    throw std::invalid_argument("build_netlist: layer count does not match geometry");
  for (const CellArray& arr : layers)
    if (arr.rows != geom.rows_per_layer || arr.cols != geom.cols)
      throw std::invalid_argument("build_netlist: cell grid does not match geometry");
  if (geom.layers == 2) validate_read_enable(geom.mode, read_enable[0], read_enable[1]);

  const int n = geom.rows_per_layer;
  const int m = geom.cols;
  const int taps = n;  // stacked layers share column taps
  Netlist net;

  auto name = [](const char* kind, int a, int b, int c) {
    std::ostringstream os;
    if (c >= 0)
      os << kind << ":l" << a << ":r" << b << ":c" << c;
    else
      os << kind << ":c" << a << ":k" << b;
    return os.str();
  };

  // Row wires, driven at the first tap.
  std::vector<int> row_nodes(static_cast<std::size_t>(geom.layers) * n * m);
  auto row_node = [&](int l, int i, int j) -> int& {
    return row_nodes[(static_cast<std::size_t>(l) * n + i) * m + j];
  };
  for (int l = 0; l < geom.layers; ++l)
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) row_node(l, i, j) = net.add_node(name("row", l, i, j));
      net.set_driven(row_node(l, i, 0), l * n + i);
      for (int j = 1; j < m; ++j)
        net.add_wire(row_node(l, i, j - 1), row_node(l, i, j), geom.r_wire_per_cell);
    }

  // Column wires with virtually grounded contacts at the end taps.
  std::vector<int> col_nodes(static_cast<std::size_t>(m) * taps);
  auto col_node = [&](int j, int k) -> int& {
    return col_nodes[static_cast<std::size_t>(j) * taps + k];
  };
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < taps; ++k) col_node(j, k) = net.add_node(name("col", j, k, -1));
    for (int k = 1; k < taps; ++k)
      net.add_wire(col_node(j, k - 1), col_node(j, k), geom.r_wire_per_cell);
    net.set_grounded(col_node(j, 0));
    net.add_column_contact(j, col_node(j, 0));
    if (geom.sense_contacts == 2 && taps > 1) {
      net.set_grounded(col_node(j, taps - 1));
      net.add_column_contact(j, col_node(j, taps - 1));
    }
  }

  // Cell branches. Read-selected cells conduct to the shared column and
  // leak to local ground; write-selected cells conduct to local ground and
  // leak into the column.
  for (int l = 0; l < geom.layers; ++l) {
    const bool re = read_enable[static_cast<std::size_t>(l)];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const CellInstance& cell = layers[static_cast<std::size_t>(l)].at(i, j);
        const double g_m = conductance(cell.device);
        if (re) {
          const double g_read = 1.0 / (1.0 / g_m + cell.n1.r_on);
          net.add_branch(row_node(l, i, j), col_node(j, i), g_read);
          net.register_device_branch(static_cast<int>(net.branches().size()) - 1);
          if (cell.n2.g_off > 0.0)
            net.add_branch(row_node(l, i, j), net.ground(), cell.n2.g_off);
        } else {
          const double g_write = 1.0 / (1.0 / g_m + cell.n2.r_on);
          net.add_branch(row_node(l, i, j), net.ground(), g_write);
          net.register_device_branch(static_cast<int>(net.branches().size()) - 1);
          if (cell.n1.g_off > 0.0)
            net.add_branch(row_node(l, i, j), col_node(j, i), cell.n1.g_off);
        }
      }
  }
  return net;
}

SolveResult solve_dc(const Netlist& net, const Eigen::Ref<const Eigen::VectorXd>& v_inputs) {
  if (v_inputs.size() != net.num_inputs())
    throw std::invalid_argument("solve_dc: expected " + std::to_string(net.num_inputs()) +
                                " input voltages, got " + std::to_string(v_inputs.size()));
  for (Eigen::Index i = 0; i < v_inputs.size(); ++i)
    if (std::abs(v_inputs(i)) > kSupplyVoltage)
      throw std::invalid_argument("solve_dc: input " + std::to_string(i) +
                                  " exceeds +/-V_DD");

  const int num_nodes = net.num_nodes();
  std::vector<int> cls(static_cast<std::size_t>(num_nodes));
  for (int v = 0; v < num_nodes; ++v) cls[static_cast<std::size_t>(v)] = net.node_class(v);

  // Known (fixed-voltage) classes: the ground return, the virtually
  // grounded contacts and the driven row heads.
  std::vector<char> known(static_cast<std::size_t>(num_nodes), 0);
  std::vector<double> fixed(static_cast<std::size_t>(num_nodes), 0.0);
  known[static_cast<std::size_t>(cls[static_cast<std::size_t>(net.ground())])] = 1;
  for (int node : net.grounded())
    known[static_cast<std::size_t>(cls[static_cast<std::size_t>(node)])] = 1;
  for (const auto& [node, input] : net.driven()) {
    const int c = cls[static_cast<std::size_t>(node)];
    const double v = v_inputs(input);
    if (known[static_cast<std::size_t>(c)] && fixed[static_cast<std::size_t>(c)] != v)
      throw SolverError("solve_dc: sources shorted at node " + net.node_name(node));
    known[static_cast<std::size_t>(c)] = 1;
    fixed[static_cast<std::size_t>(c)] = v;
  }

  // Unknown class enumeration.
  std::vector<int> unknown_index(static_cast<std::size_t>(num_nodes), -1);
  std::vector<int> unknown_nodes;
  for (int v = 0; v < num_nodes; ++v) {
    const int c = cls[static_cast<std::size_t>(v)];
    if (c == v && !known[static_cast<std::size_t>(c)]) {
      unknown_index[static_cast<std::size_t>(c)] = static_cast<int>(unknown_nodes.size());
      unknown_nodes.push_back(c);
    }
  }

  // Every unknown class must reach a known class through positive branches,
  // otherwise its voltage is undefined.
  {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes));
    for (const Netlist::Branch& br : net.branches()) {
      if (br.g <= 0.0) continue;
      const int ca = cls[static_cast<std::size_t>(br.a)];
      const int cb = cls[static_cast<std::size_t>(br.b)];
      if (ca == cb) continue;
      adj[static_cast<std::size_t>(ca)].push_back(cb);
      adj[static_cast<std::size_t>(cb)].push_back(ca);
    }
    std::vector<char> reached(static_cast<std::size_t>(num_nodes), 0);
    std::deque<int> queue;
    for (int v = 0; v < num_nodes; ++v)
      if (cls[static_cast<std::size_t>(v)] == v && known[static_cast<std::size_t>(v)]) {
        reached[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      for (int nb : adj[static_cast<std::size_t>(c)])
        if (!reached[static_cast<std::size_t>(nb)]) {
          reached[static_cast<std::size_t>(nb)] = 1;
          queue.push_back(nb);
        }
    }
    for (int v = 0; v < num_nodes; ++v) {
      const int c = cls[static_cast<std::size_t>(v)];
      if (!known[static_cast<std::size_t>(c)] && !reached[static_cast<std::size_t>(c)])
        throw SolverError("solve_dc: floating node " + net.node_name(v) +
                          " is not connected to any source or ground");
    }
  }

  const int n_unknown = static_cast<int>(unknown_nodes.size());
  Eigen::VectorXd x(n_unknown);
  if (n_unknown > 0) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(net.branches().size() * 4);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    for (const Netlist::Branch& br : net.branches()) {
      if (br.g == 0.0) continue;
      const int ca = cls[static_cast<std::size_t>(br.a)];
      const int cb = cls[static_cast<std::size_t>(br.b)];
      if (ca == cb) continue;
      const int ia = unknown_index[static_cast<std::size_t>(ca)];
      const int ib = unknown_index[static_cast<std::size_t>(cb)];
      if (ia >= 0) triplets.emplace_back(ia, ia, br.g);
      if (ib >= 0) triplets.emplace_back(ib, ib, br.g);
      if (ia >= 0 && ib >= 0) {
        triplets.emplace_back(ia, ib, -br.g);
        triplets.emplace_back(ib, ia, -br.g);
      } else if (ia >= 0) {
        rhs(ia) += br.g * fixed[static_cast<std::size_t>(cb)];
      } else if (ib >= 0) {
        rhs(ib) += br.g * fixed[static_cast<std::size_t>(ca)];
      }
    }
    Eigen::SparseMatrix<double> G(n_unknown, n_unknown);
    G.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(G);
    if (ldlt.info() != Eigen::Success)
      throw SolverError("solve_dc: nodal matrix factorization failed (singular system)");
    x = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success)
      throw SolverError("solve_dc: nodal solve failed");
  }

  SolveResult result;
  result.node_voltages.resize(num_nodes);
  for (int v = 0; v < num_nodes; ++v) {
    const int c = cls[static_cast<std::size_t>(v)];
    result.node_voltages(v) = known[static_cast<std::size_t>(c)]
                                  ? fixed[static_cast<std::size_t>(c)]
                                  : x(unknown_index[static_cast<std::size_t>(c)]);
  }

  // KCL residual per internal (unknown) class, absolute and relative to the
  // largest incident branch current.
  Eigen::VectorXd residual = Eigen::VectorXd::Zero(n_unknown);
  Eigen::VectorXd scale = Eigen::VectorXd::Zero(n_unknown);
  for (const Netlist::Branch& br : net.branches()) {
    const int ca = cls[static_cast<std::size_t>(br.a)];
    const int cb = cls[static_cast<std::size_t>(br.b)];
    if (ca == cb) continue;
    const double i = br.g * (result.node_voltages(br.a) - result.node_voltages(br.b));
    const int ia = unknown_index[static_cast<std::size_t>(ca)];
    const int ib = unknown_index[static_cast<std::size_t>(cb)];
    if (ia >= 0) {
      residual(ia) -= i;
      scale(ia) = std::max(scale(ia), std::abs(i));
    }
    if (ib >= 0) {
      residual(ib) += i;
      scale(ib) = std::max(scale(ib), std::abs(i));
    }
  }
  double abs_max = 0.0, rel_max = 0.0;
  for (int k = 0; k < n_unknown; ++k) {
    abs_max = std::max(abs_max, std::abs(residual(k)));
    if (scale(k) > 0.0) rel_max = std::max(rel_max, std::abs(residual(k)) / scale(k));
  }
  result.residual_norm = rel_max;
  result.converged = abs_max < 1e-12 || rel_max < 1e-9;

  // Column currents: everything flowing into the grounded contact classes.
  result.column_currents = Eigen::VectorXd::Zero(net.num_columns());
  for (int j = 0; j < net.num_columns(); ++j) {
    std::vector<int> contact_classes;
    for (int node : net.column_contacts()[static_cast<std::size_t>(j)]) {
      const int c = cls[static_cast<std::size_t>(node)];
      if (std::find(contact_classes.begin(), contact_classes.end(), c) ==
          contact_classes.end())
        contact_classes.push_back(c);
    }
    auto in_contact = [&](int c) {
      return std::find(contact_classes.begin(), contact_classes.end(), c) !=
             contact_classes.end();
    };
    double total = 0.0;
    for (const Netlist::Branch& br : net.branches()) {
      const int ca = cls[static_cast<std::size_t>(br.a)];
      const int cb = cls[static_cast<std::size_t>(br.b)];
      if (ca == cb) continue;
      const bool a_in = in_contact(ca);
      const bool b_in = in_contact(cb);
      if (a_in == b_in) continue;
      const int other = a_in ? br.b : br.a;
      const int contact = a_in ? br.a : br.b;
      total += br.g * (result.node_voltages(other) - result.node_voltages(contact));
    }
    result.column_currents(j) = total;
  }

  // Device currents through the registered main branches.
  result.device_currents.resize(static_cast<Eigen::Index>(net.device_branches().size()));
  for (std::size_t k = 0; k < net.device_branches().size(); ++k) {
    const Netlist::Branch& br =
        net.branches()[static_cast<std::size_t>(net.device_branches()[k])];
    result.device_currents(static_cast<Eigen::Index>(k)) =
        br.g * (result.node_voltages(br.a) - result.node_voltages(br.b));
  }
  return result;
}

Eigen::VectorXd net_branch_currents(const Netlist& net, const SolveResult& result) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(net.branches().size()));
  for (std::size_t k = 0; k < net.branches().size(); ++k) {
    const Netlist::Branch& br = net.branches()[k];
    out(static_cast<Eigen::Index>(k)) =
        br.g * (result.node_voltages(br.a) - result.node_voltages(br.b));
  }
  return out;
}

IrDropMetric ir_drop_metric(const SolveResult& result,
                            const Eigen::Ref<const Eigen::VectorXd>& ideal) {
  if (result.column_currents.size() != ideal.size())
    throw std::invalid_argument("ir_drop_metric: column count mismatch");
  IrDropMetric metric;
  metric.per_column_loss.resize(ideal.size());
  for (Eigen::Index j = 0; j < ideal.size(); ++j) {
    if (!(ideal(j) > 0.0))
      throw std::invalid_argument("ir_drop_metric: ideal current must be > 0 (column " +
                                  std::to_string(j) + ")");
    metric.per_column_loss(j) = 1.0 - result.column_currents(j) / ideal(j);
  }
  metric.worst_loss = metric.per_column_loss.maxCoeff();
  return metric;
}

Fabric::Fabric(FabricGeometry geom, std::vector<CellArray> layers,
               std::array<bool, 2> read_enable)
    : geom_(geom), layers_(std::move(layers)), read_enable_(read_enable) {
  geom_.validate();
  if (static_cast<int>(layers_.size()) != geom_.layers)
    throw std::invalid_argument("fabric: layer count does not match geometry");
  for (const CellArray& arr : layers_)
    if (arr.rows != geom_.rows_per_layer || arr.cols != geom_.cols)
      throw std::invalid_argument("fabric: cell grid does not match geometry");
  if (geom_.layers == 2) validate_read_enable(geom_.mode, read_enable_[0], read_enable_[1]);
}

void Fabric::set_read_enable(bool re0, bool re1) {
  if (geom_.layers == 2) validate_read_enable(geom_.mode, re0, re1);
  read_enable_ = {re0, re1};
}

Fabric make_fabric(const FabricGeometry& geom, const DeviceParams& device,
                   const TransistorParams& n1, const TransistorParams& n2,
                   std::uint64_t seed) {
  geom.validate();
  n1.validate();
  n2.validate();
  const int n = geom.rows_per_layer;
  const int m = geom.cols;
  auto devices = sample_devices(device, geom.layers * n * m, seed);
  std::vector<CellArray> layers;
  std::size_t next = 0;
  for (int l = 0; l < geom.layers; ++l) {
    CellArray arr(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        CellInstance& cell = arr.at(i, j);
        cell.device = devices[next++];
        cell.n1 = n1;
        cell.n2 = n2;
        cell.row = i;
        cell.col = j;
        cell.layer = l;
      }
    layers.push_back(std::move(arr));
  }
  std::array<bool, 2> re{true, true};
  if (geom.mode == Mode::DeepNet) re = {true, false};
  return Fabric(geom, std::move(layers), re);
}

}  // namespace crosstack
