#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "gridflex/errors.hpp"
#include "gridflex/network.hpp"

using namespace gridflex;

namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(GRIDFLEX_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("one bus, no lines") {
  auto net = build_network(parse_case_json(read_fixture("toy1.json")));
  CHECK(net.n_buses() == 1);
  CHECK(net.sf.rows() == 1);
  CHECK(net.sf.cols() == 0);
  CHECK(net.slack_index == 0);
}

TEST_CASE("two buses, one line") {
  // Injection at bus 1 flows toward the slack: against the from->to
  // orientation, hence -1.
  auto sf = compute_ptdf(2, {{0, 1, 0.1}}, 0);
  CHECK(sf(0, 0) == doctest::Approx(0.0));
  CHECK(sf(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("radial chain has unit shift factors") {
  auto sf = compute_ptdf(3, {{0, 1, 0.2}, {1, 2, 0.4}}, 0);
  // Injection at bus 2: 1 MW toward slack on both lines.
  CHECK(sf(2, 0) == doctest::Approx(-1.0));
  CHECK(sf(2, 1) == doctest::Approx(-1.0));
  CHECK(sf(1, 0) == doctest::Approx(-1.0));
  CHECK(sf(1, 1) == doctest::Approx(0.0));
  for (int b = 0; b < 3; ++b)
    for (int l = 0; l < 2; ++l)
      CHECK(std::abs(std::abs(sf(b, l)) - std::round(std::abs(sf(b, l)))) <=
            1e-9);
}

TEST_CASE("equal-reactance triangle splits 2/3 vs 1/3") {
  // Lines: 0-1, 1-2, 0-2, all x = 0.3; inject at bus 1, withdraw at slack 0.
  auto sf = compute_ptdf(3, {{0, 1, 0.3}, {1, 2, 0.3}, {0, 2, 0.3}}, 0);
  CHECK(sf(1, 0) == doctest::Approx(-2.0 / 3.0));
  CHECK(sf(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(sf(1, 2) == doctest::Approx(-1.0 / 3.0));  // traverses l2 against 0->2
}

TEST_CASE("slack column of sf is zero on fixtures") {
  for (const char* name : {"case6.json"}) {
    auto net = build_network(parse_case_json(read_fixture(name)));
    CHECK(net.sf.rows() == net.n_buses());
    CHECK(net.sf.cols() == net.n_lines());
    CHECK(net.sf.row(net.slack_index).cwiseAbs().maxCoeff() == 0.0);
  }
  auto doc = parse_matpower_case(read_fixture("case14.m"));
  auto net = build_network(doc);
  CHECK(net.sf.rows() == 14);
  CHECK(net.sf.cols() == 20);
  CHECK(net.sf.row(net.slack_index).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flow conservation for balanced injections") {
  auto net = build_network(parse_case_json(read_fixture("case6.json")));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amp(-50.0, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec q(net.n_buses());
    for (int b = 0; b < net.n_buses(); ++b) q[b] = amp(rng);
    q[net.slack_index] -= q.sum();  // balance
    Vec flows = net.sf.transpose() * q;
    // Nodal balance: injection = sum of flows leaving the bus.
    for (int b = 0; b < net.n_buses(); ++b) {
      double out = 0.0;
      for (int l = 0; l < net.n_lines(); ++l) {
        if (net.line_from[l] == b) out += flows[l];
        if (net.line_to[l] == b) out -= flows[l];
      }
      CHECK(std::abs(out - q[b]) <= 1e-9 * q.cwiseAbs().sum());
    }
  }
}

TEST_CASE("PTDF invariant to uniform reactance scaling") {
  auto doc = parse_case_json(read_fixture("case6.json"));
  auto base = build_network(doc).sf;
  for (auto& l : doc.lines) l.reactance *= 7.5;
  auto scaled = build_network(doc).sf;
  CHECK((base - scaled).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("disconnected network is reported with bus ids") {
  auto doc = parse_case_json(read_fixture("case6.json"));
  doc.lines.pop_back();      // drop l7 (b5-b6)
  doc.lines.erase(doc.lines.begin() + 4);  // drop l5 (b3-b6): b6 now islanded
  try {
    build_network(doc);
    FAIL("expected NetworkError");
  } catch (const NetworkError& e) {
    CHECK(std::string(e.what()).find("b6") != std::string::npos);
  }
}

TEST_CASE("hyperbox validation") {
  Hyperbox box;
  box.d_bar = Vec::Constant(2, 5.0);
  box.delta_d = Vec::Constant(2, 1.0);
  CHECK_NOTHROW(validate_hyperbox(box, 2));
  box.delta_d[1] = -0.5;
  CHECK_THROWS_AS(validate_hyperbox(box, 2), ValidationError);
  box.delta_d[1] = 0.5;
  CHECK_THROWS_AS(validate_hyperbox(box, 3), ValidationError);
}
