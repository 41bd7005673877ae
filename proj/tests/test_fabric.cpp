#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "crosstack/fabric.hpp"
#include "support/dense_oracle.hpp"

using namespace crosstack;

namespace {

TransistorParams ideal_switch() {
  TransistorParams t;
  t.r_on = 0.0;
  t.g_off = 0.0;
  return t;
}

DeviceInstance device_at(double g) {
  // state solving g = x*g_s + (1-x)*g_r for the nominal device
  DeviceInstance d;
  const double g_r = 1e-5, g_s = 1e-4;
  d.state = (g - g_r) / (g_s - g_r);
  return d;
}

CellArray grid(int rows, int cols, int layer, const Eigen::MatrixXd& conductances,
               const TransistorParams& t) {
  CellArray arr(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      arr.at(i, j).device = device_at(conductances(i, j));
      arr.at(i, j).n1 = t;
      arr.at(i, j).n2 = t;
      arr.at(i, j).row = i;
      arr.at(i, j).col = j;
      arr.at(i, j).layer = layer;
    }
  return arr;
}

FabricGeometry geometry(Mode mode, int n, int m, double r_wire, int layers,
                        int contacts = 2) {
  FabricGeometry g;
  g.mode = mode;
  g.rows_per_layer = n;
  g.cols = m;
  g.r_wire_per_cell = r_wire;
  g.layers = layers;
  g.sense_contacts = contacts;
  return g;
}

}  // namespace

TEST_CASE("expansion netlist carries 200 devices, 20 read paths per column") {
  const auto geom = geometry(Mode::Expansion, 10, 10, 3.2, 2);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(10, 10, 1e-4);
  std::vector<CellArray> layers{grid(10, 10, 0, g, TransistorParams{}),
                                grid(10, 10, 1, g, TransistorParams{})};
  const Netlist net = build_netlist(geom, layers, {true, true});
  CHECK(net.device_branches().size() == 200);
  for (int j = 0; j < 10; ++j) {
    const std::string prefix = "col:c" + std::to_string(j) + ":";
    int feeds = 0;
    for (int idx : net.device_branches()) {
      const auto& br = net.branches()[static_cast<std::size_t>(idx)];
      if (net.node_name(br.b).rfind(prefix, 0) == 0) ++feeds;
    }
    CHECK(feeds == 20);
  }
}

TEST_CASE("illegal read-enable assignments are rejected at build") {
  const auto geom_dn = geometry(Mode::DeepNet, 2, 2, 0.0, 2);
  const auto geom_ex = geometry(Mode::Expansion, 2, 2, 0.0, 2);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 2, 1e-4);
  std::vector<CellArray> layers{grid(2, 2, 0, g, TransistorParams{}),
                                grid(2, 2, 1, g, TransistorParams{})};
  CHECK_THROWS_AS(build_netlist(geom_dn, layers, {true, true}), ModeViolationError);
  CHECK_THROWS_AS(build_netlist(geom_dn, layers, {false, false}), ModeViolationError);
  CHECK_THROWS_AS(build_netlist(geom_ex, layers, {true, false}), ModeViolationError);
  CHECK_THROWS_AS(build_netlist(geom_ex, layers, {false, true}), ModeViolationError);
  CHECK_NOTHROW(build_netlist(geom_dn, layers, {true, false}));
  CHECK_NOTHROW(build_netlist(geom_ex, layers, {true, true}));
}

TEST_CASE("minimal planar cell reduces to a series path") {
  const auto geom = geometry(Mode::Planar, 1, 1, 0.0, 1);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, 1e-4);
  std::vector<CellArray> layers{grid(1, 1, 0, g, ideal_switch())};
  const Netlist net = build_netlist(geom, layers, {true, true});
  CHECK(net.device_branches().size() == 1);
  const SolveResult result = solve_dc(net, Eigen::VectorXd::Constant(1, 0.5));
  CHECK(result.converged);
  CHECK(result.column_currents(0) == doctest::Approx(50e-6).epsilon(1e-12));
  CHECK(result.device_currents(0) == doctest::Approx(50e-6).epsilon(1e-12));
}

TEST_CASE("2x2 solve matches the dense oracle") {
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 2, 1e-4);  // all set
  const Eigen::VectorXd inputs = Eigen::VectorXd::Constant(2, 0.5);

  for (int contacts : {1, 2}) {
    const auto geom = geometry(Mode::Planar, 2, 2, 3.2, 1, contacts);
    std::vector<CellArray> layers{grid(2, 2, 0, g, ideal_switch())};
    const SolveResult result = solve_dc(build_netlist(geom, layers, {true, true}), inputs);
    const Eigen::VectorXd expect = oracle::column_currents(
        1, 2, 2, 3.2, contacts == 2, [&](int, int, int) { return 1e-4; },
        [](int, int, int) { return 0.0; }, inputs);
    for (int j = 0; j < 2; ++j)
      CHECK(result.column_currents(j) == doctest::Approx(expect(j)).epsilon(1e-9));
  }
}

TEST_CASE("stacked solve with parasitics matches the dense oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> gs(1e-5, 1e-4);
  Eigen::MatrixXd g0(4, 3), g1(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) {
      g0(i, j) = gs(rng);
      g1(i, j) = gs(rng);
    }
  const auto geom = geometry(Mode::Expansion, 4, 3, 3.2, 2);
  std::vector<CellArray> layers{grid(4, 3, 0, g0, TransistorParams{}),
                                grid(4, 3, 1, g1, TransistorParams{})};
  Eigen::VectorXd inputs(8);
  inputs << 0.5, 0.2, 0.4, 0.1, 0.3, 0.5, 0.0, 0.25;
  const SolveResult result = solve_dc(build_netlist(geom, layers, {true, true}), inputs);
  const TransistorParams t;
  auto g_cell = [&](int l, int i, int j) {
    return 1.0 / (1.0 / (l == 0 ? g0(i, j) : g1(i, j)) + t.r_on);
  };
  auto g_leak = [&](int, int, int) { return t.g_off; };
  const Eigen::VectorXd expect =
      oracle::column_currents(2, 4, 3, 3.2, true, g_cell, g_leak, inputs);
  for (int j = 0; j < 3; ++j)
    CHECK(result.column_currents(j) == doctest::Approx(expect(j)).epsilon(1e-9));
}

TEST_CASE("zero inputs produce zero currents") {
  const auto geom = geometry(Mode::Expansion, 3, 3, 3.2, 2);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(3, 3, 5e-5);
  std::vector<CellArray> layers{grid(3, 3, 0, g, TransistorParams{}),
                                grid(3, 3, 1, g, TransistorParams{})};
  const SolveResult result =
      solve_dc(build_netlist(geom, layers, {true, true}), Eigen::VectorXd::Zero(6));
  CHECK(result.column_currents.cwiseAbs().maxCoeff() < 1e-18);
}

TEST_CASE("ideal_mvm evaluates the dense product") {
  Eigen::VectorXd v(2);
  v << 0.5, 0.5;
  Eigen::MatrixXd g(2, 2);
  g << 1e-4, 1e-5, 1e-4, 1e-5;
  const Eigen::VectorXd i = ideal_mvm(v, g);
  CHECK(i(0) == doctest::Approx(100e-6).epsilon(1e-12));
  CHECK(i(1) == doctest::Approx(10e-6).epsilon(1e-12));
  CHECK(ideal_mvm(Eigen::VectorXd::Zero(2), g).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd basis(2);
  basis << 0.5, 0.0;
  const Eigen::MatrixXd col = Eigen::MatrixXd::Constant(2, 1, 1e-4);
  CHECK(ideal_mvm(basis, col)(0) == doctest::Approx(50e-6).epsilon(1e-12));

  CHECK_THROWS_AS(ideal_mvm(Eigen::VectorXd::Zero(3), g), std::invalid_argument);
  Eigen::MatrixXd neg = g;
  neg(0, 0) = -1e-5;
  CHECK_THROWS_AS(ideal_mvm(v, neg), std::invalid_argument);
}

TEST_CASE("zero-wire ideal-switch solve equals ideal_mvm") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> gs(1e-5, 1e-4);
  std::uniform_real_distribution<double> vs(0.0, 0.5);
  std::uniform_int_distribution<int> dim(1, 10);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = dim(rng), m = dim(rng);
    Eigen::MatrixXd g(2 * n, m);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < m; ++j) g(i, j) = gs(rng);
    Eigen::VectorXd v(2 * n);
    for (int i = 0; i < 2 * n; ++i) v(i) = vs(rng);
    const auto geom = geometry(Mode::Expansion, n, m, 0.0, 2);
    std::vector<CellArray> layers{grid(n, m, 0, g.topRows(n), ideal_switch()),
                                  grid(n, m, 1, g.bottomRows(n), ideal_switch())};
    const SolveResult result = solve_dc(build_netlist(geom, layers, {true, true}), v);
    const Eigen::VectorXd expect = ideal_mvm(v, g);
    for (int j = 0; j < m; ++j)
      CHECK(result.column_currents(j) == doctest::Approx(expect(j)).epsilon(1e-9));
  }
}

TEST_CASE("solve_dc is linear in the inputs") {
  const auto geom = geometry(Mode::Expansion, 5, 4, 3.2, 2);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> gs(1e-5, 1e-4);
  Eigen::MatrixXd g0(5, 4), g1(5, 4);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) {
      g0(i, j) = gs(rng);
      g1(i, j) = gs(rng);
    }
  std::vector<CellArray> layers{grid(5, 4, 0, g0, TransistorParams{}),
                                grid(5, 4, 1, g1, TransistorParams{})};
  const Netlist net = build_netlist(geom, layers, {true, true});
  Eigen::VectorXd v1(10), v2(10);
  std::uniform_real_distribution<double> vs(-0.4, 0.4);
  for (int i = 0; i < 10; ++i) {
    v1(i) = vs(rng);
    v2(i) = vs(rng);
  }
  const double alpha = 0.7, beta = -1.3;
  const Eigen::VectorXd lhs = solve_dc(net, (alpha * v1 + beta * v2).eval()).column_currents;
  const Eigen::VectorXd rhs = alpha * solve_dc(net, v1).column_currents +
                              beta * solve_dc(net, v2).column_currents;
  for (int j = 0; j < 4; ++j)
    CHECK(lhs(j) == doctest::Approx(rhs(j)).epsilon(1e-9));
}

TEST_CASE("wire resistance only ever degrades column currents") {
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(6, 5, 1e-4);
  Eigen::VectorXd prev;
  for (double r_wire : {0.0, 1.0, 3.2, 10.0, 32.0}) {
    const auto geom = geometry(Mode::Expansion, 6, 5, r_wire, 2);
    std::vector<CellArray> layers{grid(6, 5, 0, g, TransistorParams{}),
                                  grid(6, 5, 1, g, TransistorParams{})};
    const Eigen::VectorXd cols =
        solve_dc(build_netlist(geom, layers, {true, true}),
                 Eigen::VectorXd::Constant(12, 1.2))
            .column_currents;
    if (prev.size() > 0)
      for (int j = 0; j < 5; ++j) CHECK(cols(j) <= prev(j) + 1e-15);
    prev = cols;
  }
}

TEST_CASE("input current balances column and ground return exactly") {
  const auto geom = geometry(Mode::DeepNet, 4, 4, 3.2, 2);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> gs(1e-5, 1e-4);
  Eigen::MatrixXd g0(4, 4), g1(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      g0(i, j) = gs(rng);
      g1(i, j) = gs(rng);
    }
  std::vector<CellArray> layers{grid(4, 4, 0, g0, TransistorParams{}),
                                grid(4, 4, 1, g1, TransistorParams{})};
  const Netlist net = build_netlist(geom, layers, {true, false});
  Eigen::VectorXd v(8);
  v << 0.39, 0.2, 0.1, 0.3, 1.2, 1.2, 1.2, 1.2;  // layer 1 write-biased
  const SolveResult result = solve_dc(net, v);
  const Eigen::VectorXd branch_i = net_branch_currents(net, result);

  std::set<int> driven_cls, ground_cls;
  for (const auto& [node, idx] : net.driven()) driven_cls.insert(net.node_class(node));
  ground_cls.insert(net.node_class(net.ground()));

  double injected = 0.0, returned = 0.0;
  for (std::size_t k = 0; k < net.branches().size(); ++k) {
    const auto& br = net.branches()[k];
    const int ca = net.node_class(br.a);
    const int cb = net.node_class(br.b);
    const bool a_drv = driven_cls.count(ca) > 0;
    const bool b_drv = driven_cls.count(cb) > 0;
    if (a_drv && !b_drv) injected += branch_i(static_cast<Eigen::Index>(k));
    if (b_drv && !a_drv) injected -= branch_i(static_cast<Eigen::Index>(k));
    const bool a_gnd = ground_cls.count(ca) > 0;
    const bool b_gnd = ground_cls.count(cb) > 0;
    if (!a_gnd && b_gnd) returned += branch_i(static_cast<Eigen::Index>(k));
    if (a_gnd && !b_gnd) returned -= branch_i(static_cast<Eigen::Index>(k));
  }
  const double to_columns = result.column_currents.sum();
  CHECK(std::abs(injected - (to_columns + returned)) < 1e-12);
  CHECK(result.converged);
  CHECK(result.residual_norm < 1e-9);
}

TEST_CASE("expansion doubles the single-layer current at zero wire resistance") {
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(5, 5, 7e-5);
  const auto stacked = geometry(Mode::Expansion, 5, 5, 0.0, 2);
  std::vector<CellArray> two{grid(5, 5, 0, g, TransistorParams{}),
                             grid(5, 5, 1, g, TransistorParams{})};
  const Eigen::VectorXd both =
      solve_dc(build_netlist(stacked, two, {true, true}), Eigen::VectorXd::Constant(10, 0.5))
          .column_currents;
  const auto single = geometry(Mode::Planar, 5, 5, 0.0, 1);
  std::vector<CellArray> one{grid(5, 5, 0, g, TransistorParams{})};
  const Eigen::VectorXd alone =
      solve_dc(build_netlist(single, one, {true, true}), Eigen::VectorXd::Constant(5, 0.5))
          .column_currents;
  for (int j = 0; j < 5; ++j)
    CHECK(both(j) == doctest::Approx(2.0 * alone(j)).epsilon(1e-12));
}

TEST_CASE("zero-resistance ties between different sources are rejected") {
  Netlist net;
  const int a = net.add_node("head_a");
  const int b = net.add_node("head_b");
  net.set_driven(a, 0);
  net.set_driven(b, 1);
  net.add_wire(a, b, 0.0);  // shorts the two drivers together
  Eigen::VectorXd v(2);
  v << 0.5, 0.3;
  CHECK_THROWS_WITH_AS(solve_dc(net, v), doctest::Contains("shorted"), SolverError);
  v << 0.4, 0.4;  // equal sources may share a node
  CHECK_NOTHROW(solve_dc(net, v));
}

TEST_CASE("floating nodes are reported by name") {
  Netlist net;
  const int a = net.add_node("island_a");
  const int b = net.add_node("island_b");
  net.add_branch(a, b, 1e-3);  // connected to each other, not to any source
  CHECK_THROWS_WITH_AS(solve_dc(net, Eigen::VectorXd(0)), doctest::Contains("island"),
                       SolverError);
}

TEST_CASE("ir_drop_metric follows its definition") {
  SolveResult res;
  Eigen::VectorXd ideal(3);
  ideal << 1e-3, 2e-3, 4e-3;
  res.column_currents = 0.9 * ideal;
  const IrDropMetric m = ir_drop_metric(res, ideal);
  for (int j = 0; j < 3; ++j) CHECK(m.per_column_loss(j) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(m.worst_loss == doctest::Approx(0.10).epsilon(1e-12));

  res.column_currents = ideal;
  CHECK(ir_drop_metric(res, ideal).worst_loss == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::VectorXd bad = ideal;
  bad(1) = 0.0;
  CHECK_THROWS_AS(ir_drop_metric(res, bad), std::invalid_argument);
  CHECK_THROWS_AS(ir_drop_metric(res, Eigen::VectorXd::Ones(2)), std::invalid_argument);
}

TEST_CASE("netlist exports one line per branch") {
  const auto geom = geometry(Mode::Planar, 2, 2, 3.2, 1);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 2, 1e-4);
  std::vector<CellArray> layers{grid(2, 2, 0, g, TransistorParams{})};
  const Netlist net = build_netlist(geom, layers, {true, true});
  std::ostringstream os;
  net.export_branches(os);
  int lines = 0;
  std::string line;
  std::istringstream is(os.str());
  while (std::getline(is, line)) {
    ++lines;
    std::istringstream ls(line);
    std::string na, nb;
    double gv;
    CHECK((ls >> na >> nb >> gv));
  }
  CHECK(lines == static_cast<int>(net.branches().size()));
}

TEST_CASE("solve_dc validates its inputs") {
  const auto geom = geometry(Mode::Planar, 1, 1, 0.0, 1);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, 1e-4);
  std::vector<CellArray> layers{grid(1, 1, 0, g, TransistorParams{})};
  const Netlist net = build_netlist(geom, layers, {true, true});
  CHECK_THROWS_AS(solve_dc(net, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(solve_dc(net, Eigen::VectorXd::Constant(1, 1.9)), std::invalid_argument);
}
