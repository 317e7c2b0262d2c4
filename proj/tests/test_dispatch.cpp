#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "gridflex/dispatch.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/lp.hpp"

using namespace gridflex;

namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(GRIDFLEX_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CaseDocument one_bus_case(double gen_cost) {
  CaseDocument doc;
  doc.base_mva = 100.0;
  doc.buses.push_back({"b1", 5.0});
  doc.generators.push_back({"g1", "b1", 0.0, 10.0, 1000.0, 1000.0, gen_cost});
  return doc;
}

IntervalState mid_state(const Network& net, const DispatchConfig& cfg) {
  IntervalState st;
  st.p_prev = Vec::Zero(net.n_gens());
  for (int g = 0; g < net.n_gens(); ++g)
    st.p_prev[g] = 0.5 * (net.doc.generators[g].p_min +
                          net.doc.generators[g].p_max);
  const int ne = cfg.include_storage ? net.n_storage() : 0;
  st.e_prev = Vec::Zero(ne);
  for (int s = 0; s < ne; ++s) st.e_prev[s] = net.doc.storage[s].e_initial;
  return st;
}

Vec scalar_xi(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_CASE("toy assembly has the expected shape") {
  auto net = build_network(one_bus_case(0.0));
  DispatchConfig cfg;
  auto st = mid_state(net, cfg);
  auto m = build_matrices(net, st, cfg);
  // Rows: gen upper, gen lower, ramp up, ramp down, budget.
  CHECK(m.rows_ineq() == 5);
  CHECK(m.rows_eq() == 1);
  CHECK(m.vars() == 1);
  CHECK(m.hx2(0, 0) == 1.0);
  CHECK(m.row_labels.back() == "balance");
  CHECK(m.row_labels[m.rows_ineq() - 1] == "budget");
  CHECK(m.tau == doctest::Approx(0.0));  // zero-cost system
  CHECK(m.var_shift.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toy violation values") {
  auto net = build_network(one_bus_case(0.0));
  DispatchConfig cfg;
  auto m = build_matrices(net, mid_state(net, cfg), cfg);
  CHECK(evaluate_phi(m, scalar_xi(5.0)) == doctest::Approx(0.0));
  CHECK(evaluate_phi(m, scalar_xi(12.0)) == doctest::Approx(2.0));
  CHECK(evaluate_phi(m, scalar_xi(-1.0)) == doctest::Approx(1.0));
  for (double xi : {5.0, 12.0, -1.0}) {
    auto d = evaluate_phi_dual(m, scalar_xi(xi));
    CHECK(d.value == doctest::Approx(evaluate_phi(m, scalar_xi(xi))));
    CHECK(d.mu.maxCoeff() <= 1e-9);
    CHECK(d.mu.minCoeff() >= -1.0 - 1e-9);
    CHECK(std::abs(d.nu[0]) <= 1.0 + 1e-9);
  }
}

TEST_CASE("budget row caps the dispatch cost") {
  auto net = build_network(one_bus_case(1.0));
  DispatchConfig cfg;  // tau_margin 0.2 -> tau = 6 at nominal cost 5
  auto m = build_matrices(net, mid_state(net, cfg), cfg);
  CHECK(m.nominal_cost == doctest::Approx(5.0));
  CHECK(m.tau == doctest::Approx(6.0));
  CHECK(evaluate_phi(m, scalar_xi(6.0)) == doctest::Approx(0.0));
  // Serving 7.5 MW costs 7.5 > 6: cheapest fix is 1.5 of budget slack.
  CHECK(evaluate_phi(m, scalar_xi(7.5)) == doctest::Approx(1.5));
}

TEST_CASE("include_storage=false drops storage entirely") {
  auto net = build_network(parse_case_json(read_fixture("case6.json")));
  DispatchConfig cfg;
  cfg.include_storage = false;
  auto st = mid_state(net, cfg);
  auto m = build_matrices(net, st, cfg);
  CHECK(m.vars() == net.n_gens());
  // 2|G| capacity + 2|G| ramp + 2|L| line + budget.
  CHECK(m.rows_ineq() == 4 * net.n_gens() + 2 * net.n_lines() + 1);
  for (const auto& label : m.row_labels)
    CHECK(label.find("ess_") == std::string::npos);
}

TEST_CASE("line rows carry the shift-factor column with both signs") {
  CaseDocument doc;
  doc.base_mva = 100.0;
  doc.slack_bus = "b1";
  doc.buses.push_back({"b1", 0.0});
  doc.buses.push_back({"b2", 3.0});
  doc.generators.push_back({"g1", "b1", 0.0, 10.0, 100.0, 100.0, 1.0});
  doc.lines.push_back({"l1", "b1", "b2", 0.1, 4.0});
  auto net = build_network(doc);
  DispatchConfig cfg;
  auto m = build_matrices(net, mid_state(net, cfg), cfg);
  int plus = -1, minus = -1;
  for (int r = 0; r < m.rows_ineq(); ++r) {
    if (m.row_labels[r] == "line_plus:l1") plus = r;
    if (m.row_labels[r] == "line_minus:l1") minus = r;
  }
  REQUIRE(plus >= 0);
  REQUIRE(minus >= 0);
  CHECK(m.hx1.row(plus).transpose() == net.sf.col(0));
  CHECK(m.hx1.row(minus).transpose() == -net.sf.col(0));
  CHECK(m.h1[plus] == doctest::Approx(4.0));
  CHECK(m.h1[minus] == doctest::Approx(4.0));
}

TEST_CASE("nominal dispatch on the toy") {
  auto net = build_network(one_bus_case(1.0));
  DispatchConfig cfg;
  auto st = mid_state(net, cfg);
  auto nom = solve_nominal_dispatch(net, st, Vec::Constant(1, 5.0), cfg);
  CHECK(nom.dispatch[0] == doctest::Approx(5.0));
  CHECK(nom.cost == doctest::Approx(5.0));
  CHECK(nom.next_state.p_prev[0] == doctest::Approx(5.0));

  auto zero = solve_nominal_dispatch(net, st, Vec::Zero(1), cfg);
  CHECK(zero.dispatch.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(zero.cost == doctest::Approx(0.0));
}

TEST_CASE("cheap storage discharges before expensive generation") {
  CaseDocument doc;
  doc.base_mva = 100.0;
  doc.buses.push_back({"b1", 8.0});
  doc.generators.push_back({"g1", "b1", 0.0, 20.0, 100.0, 100.0, 10.0});
  doc.storage.push_back({"s1", "b1", 0.0, 10.0, 10.0, 5.0, 5.0, 0.0});
  auto net = build_network(doc);
  DispatchConfig cfg;
  auto st = mid_state(net, cfg);
  auto nom = solve_nominal_dispatch(net, st, Vec::Constant(1, 8.0), cfg);
  CHECK(nom.dispatch[1] == doctest::Approx(5.0));  // full discharge power
  CHECK(nom.dispatch[0] == doctest::Approx(3.0));
  CHECK(nom.next_state.e_prev[0] == doctest::Approx(5.0));
}

TEST_CASE("infeasible nominal dispatch names rows") {
  auto net = build_network(one_bus_case(1.0));
  DispatchConfig cfg;
  auto st = mid_state(net, cfg);
  try {
    solve_nominal_dispatch(net, st, Vec::Constant(1, 20.0), cfg);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(!e.rows.empty());
  }
  CHECK_THROWS_AS(build_matrices(net, st, cfg, Vec::Constant(1, 20.0)),
                  InfeasibleError);
}

TEST_CASE("phi at the nominal load is zero on fixtures") {
  for (const char* name : {"toy1.json", "case6.json"}) {
    auto net = build_network(parse_case_json(read_fixture(name)));
    DispatchConfig cfg;
    auto st = mid_state(net, cfg);
    auto m = build_matrices(net, st, cfg);
    CHECK(evaluate_phi(m, net.load) <= 1e-7);
  }
}

TEST_CASE("primal/dual agreement and convexity on random loads") {
  auto net = build_network(parse_case_json(read_fixture("case6.json")));
  DispatchConfig cfg;
  auto st = mid_state(net, cfg);
  auto m = build_matrices(net, st, cfg);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> load(-40.0, 140.0);
  std::uniform_real_distribution<double> alpha_pick(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    Vec xi1(net.n_buses()), xi2(net.n_buses());
    for (int b = 0; b < net.n_buses(); ++b) {
      xi1[b] = load(rng);
      xi2[b] = load(rng);
    }
    const double p1 = evaluate_phi(m, xi1);
    const double p2 = evaluate_phi(m, xi2);
    CHECK(p1 >= -1e-9);
    const double d1 = evaluate_phi_dual(m, xi1).value;
    CHECK(std::abs(p1 - d1) <= 1e-6 * (1.0 + p1));
    const double a = alpha_pick(rng);
    const double pmix = evaluate_phi(m, a * xi1 + (1.0 - a) * xi2);
    CHECK(pmix <= a * p1 + (1.0 - a) * p2 + 1e-6);
  }
}

TEST_CASE("variable shifting is value-neutral") {
  // Rebuild the violation LP in original (unshifted) variables, with the
  // storage column bounded below by -p_charge_max, and compare.
  auto net = build_network(parse_case_json(read_fixture("case6.json")));
  DispatchConfig cfg;
  auto st = mid_state(net, cfg);
  auto m = build_matrices(net, st, cfg);
  const int m1 = m.rows_ineq();
  const int m2 = m.rows_eq();
  const int nv = m.vars();

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> load(-30.0, 130.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vec xi(net.n_buses());
    for (int b = 0; b < net.n_buses(); ++b) xi[b] = load(rng);

    const int total = nv + m1 + 2 * m2;
    lp::LinearProgram p = lp::LinearProgram::sized(total, lp::Sense::Minimize);
    p.cost.tail(m1 + 2 * m2) = Vec::Ones(m1 + 2 * m2);
    Eigen::MatrixXd gi = Eigen::MatrixXd::Zero(m1, total);
    gi.leftCols(nv) = m.a1;
    gi.block(0, nv, m1, m1) = -Eigen::MatrixXd::Identity(m1, m1);
    p.ineq = gi.sparseView();
    // Undo the shift: rhs in original variables is h1 + a1 * var_shift.
    p.ineq_rhs = m.h1 + m.a1 * m.var_shift + m.hx1 * xi;
    Eigen::MatrixXd ge = Eigen::MatrixXd::Zero(m2, total);
    ge.leftCols(nv) = m.a2;
    ge(0, nv + m1) = 1.0;
    ge(0, nv + m1 + m2) = -1.0;
    p.eq = ge.sparseView();
    p.eq_rhs = m.h2 + m.a2 * m.var_shift + m.hx2 * xi;
    p.lower = Vec::Zero(total);
    p.lower.head(nv) = m.var_shift;  // original-variable domains

    auto direct = lp::solve_lp(p);
    REQUIRE(direct.status == lp::Status::Optimal);
    const double shifted = evaluate_phi(m, xi);
    CHECK(std::abs(direct.objective - shifted) <= 1e-6 * (1.0 + shifted));
  }
}

TEST_CASE("matrix dump lists every labeled row") {
  auto net = build_network(one_bus_case(1.0));
  DispatchConfig cfg;
  auto m = build_matrices(net, mid_state(net, cfg), cfg);
  const std::string text = dump_matrices(m);
  for (const auto& label : m.row_labels)
    CHECK(text.find(label) != std::string::npos);
}
