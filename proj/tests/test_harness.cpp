#include "doctest.h"

#include <fstream>
#include <sstream>

#include "gridflex/case.hpp"
#include "gridflex/harness.hpp"
#include "test_cases.hpp"

using namespace gridflex;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(GRIDFLEX_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Network fixture_network(const std::string& name) {
  auto doc = parse_case_json(slurp(name));
  validate_case(doc);
  return build_network(doc);
}

RunConfig toy_config(int intervals) {
  RunConfig cfg;
  cfg.intervals = intervals;
  cfg.delta_d_fraction = 2.0;  // toy anchor: half-width 10 around a 5 MW load
  cfg.beta = 0.05;
  return cfg;
}

}  // namespace

TEST_CASE("scenario generation is bounded, seeded, and outlier-aware") {
  RunConfig cfg;
  cfg.intervals = 6;

  cfg.include_outlier = false;
  auto plain = generate_scenarios(cfg, 5, 7);
  CHECK(plain.multipliers.rows() == 5);
  CHECK(plain.multipliers.cols() == 6);
  CHECK(plain.multipliers.minCoeff() >= 0.99);
  CHECK(plain.multipliers.maxCoeff() <= 1.01);

  auto again = generate_scenarios(cfg, 5, 7);
  CHECK(again.multipliers == plain.multipliers);
  auto other = generate_scenarios(cfg, 5, 8);
  CHECK(other.multipliers != plain.multipliers);

  cfg.include_outlier = true;
  auto spiked = generate_scenarios(cfg, 5, 7);
  CHECK(spiked.multipliers.topRows(4) == plain.multipliers.topRows(4));
  CHECK((spiked.multipliers.row(4).array() == 1.09).all());
  int outlier_rows = 0;
  for (int s = 0; s < 5; ++s)
    if ((spiked.multipliers.row(s).array() == 1.09).all()) ++outlier_rows;
  CHECK(outlier_rows == 1);
}

TEST_CASE("single-interval toy run reproduces the analytic anchors") {
  auto net = build_network(testcases::toy_case());
  auto out = run_sequence(net, toy_config(1));
  REQUIRE(out.completed);
  REQUIRE(out.results.size() == 1);
  const auto& r = out.results[0];
  CHECK(r.interval == 1);
  REQUIRE(r.lambda_det.has_value());
  REQUIRE(r.lambda_sto.has_value());
  CHECK(*r.lambda_det == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(*r.lambda_sto == doctest::Approx(0.505).epsilon(1e-4));
  CHECK(r.converged_det);
  CHECK(r.converged_sto);
  CHECK(r.dispatch_cost == doctest::Approx(0.0));
}

TEST_CASE("stationary system keeps lambda constant across intervals") {
  auto net = build_network(testcases::toy_case());
  auto out = run_sequence(net, toy_config(4));
  REQUIRE(out.completed);
  REQUIRE(out.results.size() == 4);
  for (const auto& r : out.results) {
    CHECK(*r.lambda_det == doctest::Approx(*out.results[0].lambda_det));
    CHECK(*r.lambda_sto == doctest::Approx(*out.results[0].lambda_sto));
  }
}

TEST_CASE("multi-scenario lambda is the minimum over the trace") {
  auto net = build_network(testcases::toy_case());
  RunConfig cfg = toy_config(3);
  cfg.scenario_count = 4;
  auto scen = generate_scenarios(cfg, cfg.scenario_count, 99);
  auto out = run_sequence(net, cfg, &scen);
  REQUIRE(out.completed);
  REQUIRE(out.trace.size() == 12);
  for (const auto& r : out.results) {
    double min_det = 2.0, min_sto = 2.0;
    for (const auto& tr : out.trace) {
      if (tr.interval != r.interval) continue;
      min_det = std::min(min_det, *tr.lambda_det);
      min_sto = std::min(min_sto, *tr.lambda_sto);
    }
    CHECK(*r.lambda_det == doctest::Approx(min_det));
    CHECK(*r.lambda_sto == doctest::Approx(min_sto));
  }
}

TEST_CASE("more scenarios never increase lambda") {
  auto net = fixture_network("outlier1.json");
  RunConfig cfg;
  cfg.intervals = 2;
  cfg.delta_d_fraction = 0.5;
  cfg.mode = AssessMode::Det;
  auto few = generate_scenarios(cfg, 2, 5);
  auto more = generate_scenarios(cfg, 4, 5);
  CHECK(more.multipliers.topRows(2) == few.multipliers);
  auto out_few = run_sequence(net, cfg, &few);
  auto out_more = run_sequence(net, cfg, &more);
  for (std::size_t t = 0; t < out_few.results.size(); ++t)
    CHECK(*out_more.results[t].lambda_det <=
          *out_few.results[t].lambda_det + 1e-9);
}

TEST_CASE("the outlier zeroes the worst-case metric but not the budgeted one") {
  auto net = fixture_network("outlier1.json");
  RunConfig cfg;
  cfg.intervals = 2;
  cfg.delta_d_fraction = 0.5;
  cfg.beta = 0.05;
  cfg.scenario_count = 3;
  cfg.include_outlier = true;
  auto scen = generate_scenarios(cfg, cfg.scenario_count, 11);
  auto out = run_sequence(net, cfg, &scen);
  REQUIRE(out.completed);
  for (const auto& r : out.results) {
    CHECK(*r.lambda_det == 0.0);
    CHECK(*r.lambda_sto > 0.0);
    CHECK(r.converged_det);
    CHECK(r.converged_sto);
  }

  // Dropping the outlier restores a positive worst-case metric.
  RunConfig calm = cfg;
  calm.include_outlier = false;
  calm.scenario_count = 2;
  auto calm_scen = generate_scenarios(calm, calm.scenario_count, 11);
  auto calm_out = run_sequence(net, calm, &calm_scen);
  for (const auto& r : calm_out.results) CHECK(*r.lambda_det > 0.0);
}

TEST_CASE("storage widens early flexibility and narrows it once drained") {
  auto net = fixture_network("ess_drain.json");
  RunConfig cfg;
  cfg.intervals = 3;
  cfg.interval_minutes = 60.0;
  cfg.delta_d_fraction = 0.5;
  cfg.beta = 0.05;
  cfg.dispatch.tau_margin = 10.0;
  auto pair = run_ess_sensitivity(net, cfg);
  REQUIRE(pair.with_storage.completed);
  REQUIRE(pair.without_storage.completed);

  const auto& with1 = pair.with_storage.results[0];
  const auto& without1 = pair.without_storage.results[0];
  CHECK(*with1.lambda_det >= *without1.lambda_det - 1e-9);
  CHECK(*with1.lambda_sto >= *without1.lambda_sto - 1e-9);
  CHECK(*with1.lambda_det == doctest::Approx(1.0));
  CHECK(*without1.lambda_det == doctest::Approx(0.5));

  const auto& with3 = pair.with_storage.results[2];
  const auto& without3 = pair.without_storage.results[2];
  CHECK(*with3.lambda_det < *without3.lambda_det - 1e-6);
  CHECK(*with3.lambda_det == doctest::Approx(0.0));
  CHECK(*without3.lambda_det == doctest::Approx(0.5));

  // Nominal cost climbs as the free storage energy runs out.
  CHECK(pair.with_storage.results[0].dispatch_cost == doctest::Approx(3.0));
  CHECK(pair.with_storage.results[2].dispatch_cost == doctest::Approx(8.0));
}

TEST_CASE("an infeasible nominal dispatch halts with partial results") {
  CaseDocument doc;
  doc.buses.push_back({"b1", 8.0});
  doc.generators.push_back({"g1", "b1", 0.0, 7.0, 5.0, 5.0, 1.0});
  doc.storage.push_back({"s1", "b1", 0.0, 2.0, 2.0, 1.0, 5.0, 0.0});
  auto net = build_network(doc);
  RunConfig cfg;
  cfg.intervals = 4;
  cfg.interval_minutes = 60.0;
  cfg.mode = AssessMode::Det;
  auto out = run_sequence(net, cfg);
  CHECK(!out.completed);
  CHECK(out.results.size() == 1);
  CHECK(out.diagnostic.find("interval 2") != std::string::npos);
}
