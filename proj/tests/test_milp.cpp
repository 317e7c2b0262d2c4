#include "doctest.h"

#include <random>

#include "gridflex/errors.hpp"
#include "gridflex/lp.hpp"
#include "test_util.hpp"

using namespace gridflex;
using namespace gridflex::lp;
using gridflex::testutil::dense_to_sparse;

namespace {

/// Exhaustive oracle: try every binary pattern, solve the residual LP.
bool enumerate_milp(const MixedBinaryProgram& p, double* best_obj) {
  const int k = static_cast<int>(p.binaries.size());
  bool found = false;
  double best = 0.0;
  for (unsigned long pat = 0; pat < (1ul << k); ++pat) {
    LinearProgram fixed = p.lp;
    for (int i = 0; i < k; ++i) {
      const double v = (pat >> i & 1) ? 1.0 : 0.0;
      if (v < fixed.lower[p.binaries[i]] - 1e-12 ||
          v > fixed.upper[p.binaries[i]] + 1e-12)
        goto next_pattern;
      fixed.lower[p.binaries[i]] = v;
      fixed.upper[p.binaries[i]] = v;
    }
    {
      auto s = solve_lp(fixed);
      if (s.status == Status::Optimal) {
        if (!found ||
            (p.lp.sense == Sense::Minimize ? s.objective < best
                                           : s.objective > best)) {
          best = s.objective;
          found = true;
        }
      }
    }
  next_pattern:;
  }
  *best_obj = best;
  return found;
}

}  // namespace

TEST_CASE("forced binary via equality") {
  // z+ + z- = 1, maximize z+  ->  z+ = 1.
  LinearProgram p = LinearProgram::sized(2, Sense::Maximize);
  p.cost << 1.0, 0.0;
  Eigen::MatrixXd e(1, 2);
  e << 1.0, 1.0;
  p.eq = dense_to_sparse(e);
  p.eq_rhs = Vec::Constant(1, 1.0);
  p.lower = Vec::Zero(2);
  p.upper = Vec::Ones(2);
  auto s = solve_milp({p, {0, 1}});
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.primal[0] == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(1.0));
}

TEST_CASE("two-item knapsack") {
  LinearProgram p = LinearProgram::sized(2, Sense::Maximize);
  p.cost << 3.0, 2.0;
  Eigen::MatrixXd g(1, 2);
  g << 1.0, 1.0;
  p.ineq = dense_to_sparse(g);
  p.ineq_rhs = Vec::Constant(1, 1.0);
  p.lower = Vec::Zero(2);
  p.upper = Vec::Ones(2);
  auto s = solve_milp({p, {0, 1}});
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.primal[0] == doctest::Approx(1.0));
}

TEST_CASE("random mixed-binary instances match exhaustive enumeration") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> nbin_pick(2, 8);
  int compared = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const int nbin = nbin_pick(rng);
    const int ncont = 3;
    auto p = testutil::random_feasible_lp(rng, nbin + ncont, 8,
                                          trial % 2 ? Sense::Maximize
                                                    : Sense::Minimize);
    MixedBinaryProgram mbp;
    mbp.lp = p;
    for (int j = 0; j < nbin; ++j) {
      mbp.lp.lower[j] = 0.0;
      mbp.lp.upper[j] = 1.0;
      mbp.binaries.push_back(j);
    }
    double oracle = 0.0;
    const bool oracle_feasible = enumerate_milp(mbp, &oracle);
    auto s = solve_milp(mbp);
    if (!oracle_feasible) {
      CHECK(s.status == Status::Infeasible);
      continue;
    }
    REQUIRE(s.status == Status::Optimal);
    CHECK(std::abs(s.objective - oracle) <= 1e-6);
    for (int j : mbp.binaries) {
      const double v = s.primal[j];
      CHECK(std::min(v, 1.0 - v) <= 1e-6);
    }
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("MILP optimum is bounded by its LP relaxation") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = testutil::random_feasible_lp(rng, 6, 6, Sense::Minimize);
    MixedBinaryProgram mbp{p, {0, 1, 2}};
    for (int j : mbp.binaries) {
      mbp.lp.lower[j] = 0.0;
      mbp.lp.upper[j] = 1.0;
    }
    auto relax = solve_lp(mbp.lp);
    auto s = solve_milp(mbp);
    if (s.status != Status::Optimal) continue;
    REQUIRE(relax.status == Status::Optimal);
    CHECK(s.objective >= relax.objective - 1e-7);
  }
}

TEST_CASE("warm incumbent is kept when already optimal") {
  LinearProgram p = LinearProgram::sized(2, Sense::Maximize);
  p.cost << 3.0, 2.0;
  Eigen::MatrixXd g(1, 2);
  g << 1.0, 1.0;
  p.ineq = dense_to_sparse(g);
  p.ineq_rhs = Vec::Constant(1, 1.0);
  p.lower = Vec::Zero(2);
  p.upper = Vec::Ones(2);
  MilpOptions opts;
  opts.has_incumbent = true;
  opts.incumbent = Vec(2);
  opts.incumbent << 1.0, 0.0;
  opts.incumbent_objective = 3.0;
  auto s = solve_milp({p, {0, 1}}, opts);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(3.0));
}

TEST_CASE("binary cap is enforced") {
  LinearProgram p = LinearProgram::sized(3, Sense::Minimize);
  p.lower = Vec::Zero(3);
  p.upper = Vec::Ones(3);
  MilpOptions opts;
  opts.binary_cap = 2;
  CHECK_THROWS_AS(solve_milp({p, {0, 1, 2}}, opts), ValidationError);
}

TEST_CASE("deterministic branching") {
  std::mt19937_64 rng(8);
  auto p = testutil::random_feasible_lp(rng, 8, 10, Sense::Maximize);
  MixedBinaryProgram mbp{p, {0, 1, 2, 3}};
  for (int j : mbp.binaries) {
    mbp.lp.lower[j] = 0.0;
    mbp.lp.upper[j] = 1.0;
  }
  auto a = solve_milp(mbp);
  auto b = solve_milp(mbp);
  CHECK(a.status == b.status);
  if (a.status == Status::Optimal) CHECK((a.primal - b.primal).norm() == 0.0);
}
