#include "doctest.h"

#include <random>

#include "gridflex/dispatch.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/oracle.hpp"

using namespace gridflex;

namespace {

CaseDocument one_bus_case(double cap) {
  CaseDocument doc;
  doc.base_mva = 100.0;
  doc.buses.push_back({"b1", 5.0});
  doc.generators.push_back({"g1", "b1", 0.0, cap, 1000.0, 1000.0, 0.0});
  return doc;
}

DispatchMatrices toy_matrices(double cap = 10.0) {
  auto net = build_network(one_bus_case(cap));
  DispatchConfig cfg;
  IntervalState st;
  st.p_prev = Vec::Constant(1, 5.0);
  st.e_prev = Vec();
  return build_matrices(net, st, cfg);
}

Hyperbox toy_box() {
  Hyperbox box;
  box.d_bar = Vec::Constant(1, 5.0);
  box.delta_d = Vec::Constant(1, 10.0);
  return box;
}

CaseDocument chain_case(int n_buses) {
  CaseDocument doc;
  doc.base_mva = 100.0;
  for (int b = 0; b < n_buses; ++b)
    doc.buses.push_back({"b" + std::to_string(b + 1), 1.0});
  doc.generators.push_back({"g1", "b1", 0.0, 100.0, 1000.0, 1000.0, 0.0});
  for (int b = 1; b < n_buses; ++b)
    doc.lines.push_back({"l" + std::to_string(b), "b" + std::to_string(b),
                         "b" + std::to_string(b + 1), 0.1, 1000.0});
  return doc;
}

}  // namespace

TEST_CASE("lambda 0 collapses every vertex to the nominal point") {
  auto m = toy_matrices();
  auto vs = enumerate_vertex_phis(m, toy_box(), 0.0);
  REQUIRE(vs.size() == 2);
  for (const auto& v : vs) CHECK(v.phi == doctest::Approx(0.0));
}

TEST_CASE("toy vertices at lambda 0.6") {
  auto m = toy_matrices();
  auto vs = enumerate_vertex_phis(m, toy_box(), 0.6);
  REQUIRE(vs.size() == 2);
  // xi in {-1, 11}: one unit short of p >= 0, one unit over the 10 MW cap.
  for (const auto& v : vs) CHECK(v.phi == doctest::Approx(1.0));
}

TEST_CASE("wide-line 2-bus system matches the merged 1-bus system") {
  CaseDocument doc;
  doc.base_mva = 100.0;
  doc.slack_bus = "b1";
  doc.buses.push_back({"b1", 2.0});
  doc.buses.push_back({"b2", 3.0});
  doc.generators.push_back({"g1", "b1", 0.0, 10.0, 1000.0, 1000.0, 0.0});
  doc.lines.push_back({"l1", "b1", "b2", 0.1, 1000.0});
  auto net = build_network(doc);
  DispatchConfig cfg;
  IntervalState st;
  st.p_prev = Vec::Constant(1, 5.0);
  auto m2 = build_matrices(net, st, cfg);
  Hyperbox box2;
  box2.d_bar = net.load;
  box2.delta_d = Vec::Constant(2, 2.0);

  auto m1 = toy_matrices();
  const double lambda = 0.7;
  auto vs = enumerate_vertex_phis(m2, box2, lambda);
  for (const auto& v : vs) {
    Vec xi1(1);
    xi1[0] = 2.0 + v.sign[0] * lambda * 2.0 + 3.0 + v.sign[1] * lambda * 2.0;
    CHECK(v.phi == doctest::Approx(evaluate_phi(m1, xi1)).epsilon(1e-6));
  }
}

TEST_CASE("deterministic oracle anchors") {
  CHECK(det_lambda_oracle(toy_matrices(), toy_box()) ==
        doctest::Approx(0.5).epsilon(1e-6));
  // Degenerate box: any lambda works.
  Hyperbox flat = toy_box();
  flat.delta_d[0] = 0.0;
  CHECK(det_lambda_oracle(toy_matrices(), flat) == doctest::Approx(1.0));
  // Cap 15: the binding side flips to the p >= 0 floor at xi < 0.
  CHECK(det_lambda_oracle(toy_matrices(15.0), toy_box()) ==
        doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("worst expectation anchors") {
  auto m = toy_matrices();
  CHECK(worst_expectation_oracle(m, toy_box(), 0.3) == doctest::Approx(0.0));
  CHECK(worst_expectation_oracle(m, toy_box(), 0.55) ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK(worst_expectation_oracle(m, toy_box(), 0.505) ==
        doctest::Approx(0.05).epsilon(1e-5));
}

TEST_CASE("worst expectation never exceeds the worst vertex") {
  auto m = toy_matrices();
  for (double lambda : {0.2, 0.5, 0.55, 0.8, 1.0}) {
    double worst = 0.0;
    for (const auto& v : enumerate_vertex_phis(m, toy_box(), lambda))
      worst = std::max(worst, v.phi);
    CHECK(worst_expectation_oracle(m, toy_box(), lambda) <= worst + 1e-8);
  }
}

TEST_CASE("stochastic oracle anchors") {
  auto m = toy_matrices();
  CHECK(sto_lambda_oracle(m, toy_box(), 0.05) ==
        doctest::Approx(0.505).epsilon(1e-4));
  CHECK(sto_lambda_oracle(m, toy_box(), 0.0) ==
        doctest::Approx(det_lambda_oracle(m, toy_box())).epsilon(1e-4));
  CHECK(sto_lambda_oracle(m, toy_box(), 1e6) == doctest::Approx(1.0));
}

TEST_CASE("bisections are certified at the boundary") {
  auto m = toy_matrices();
  const double ld = det_lambda_oracle(m, toy_box());
  double g_at = 0.0, g_past = 0.0;
  for (const auto& v : enumerate_vertex_phis(m, toy_box(), ld))
    g_at = std::max(g_at, v.phi);
  for (const auto& v : enumerate_vertex_phis(m, toy_box(), ld + 2e-6))
    g_past = std::max(g_past, v.phi);
  CHECK(g_at <= 1e-6);
  CHECK(g_past > 1e-6);

  const double ls = sto_lambda_oracle(m, toy_box(), 0.05);
  CHECK(worst_expectation_oracle(m, toy_box(), ls) <= 0.05 + 2e-6);
  CHECK(worst_expectation_oracle(m, toy_box(), ls + 2e-5) > 0.05);
}

TEST_CASE("size refusal") {
  DispatchConfig cfg;
  {
    auto net = build_network(chain_case(21));
    IntervalState st;
    st.p_prev = Vec::Constant(1, 21.0);
    auto m = build_matrices(net, st, cfg);
    Hyperbox box;
    box.d_bar = net.load;
    box.delta_d = Vec::Ones(21);
    CHECK_THROWS_AS(enumerate_vertex_phis(m, box, 0.5), ValidationError);
  }
  {
    auto net = build_network(chain_case(13));
    IntervalState st;
    st.p_prev = Vec::Constant(1, 13.0);
    auto m = build_matrices(net, st, cfg);
    Hyperbox box;
    box.d_bar = net.load;
    box.delta_d = Vec::Ones(13);
    CHECK_THROWS_AS(worst_expectation_oracle(m, box, 0.5), ValidationError);
    CHECK_NOTHROW(det_lambda_oracle(m, box));
  }
}
