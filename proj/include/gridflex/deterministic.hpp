#pragma once

#include <vector>

#include "gridflex/assessment.hpp"
#include "gridflex/dispatch.hpp"
#include "gridflex/network.hpp"

namespace gridflex {

struct DetOptions {
  double tolerance = 1e-6;
  int max_iter = 30;
};

struct WorstCase {
  double psi = 0.0;         // max over vertices of phi
  std::vector<int> z_plus;  // N entries in {0,1}
  Vec mu;                   // M1
  Vec nu;                   // M2
  bool converged = true;
};

/// Worst-case violation over the box at level lambda: the gamma = 0 special
/// case of the stochastic subproblem.
WorstCase worst_case_violation(const DispatchMatrices& m, const Hyperbox& box,
                               double lambda);

/// lambda_det = max{lambda in [0,1] : worst-case violation <= tolerance},
/// via a cutting-plane loop whose master is the 1-D LP
///   max lambda  s.t.  c0_k + lambda*c1_k <= 0 for every cut k.
/// A violating nominal point short-circuits to lambda = 0 with a diagnostic.
AssessmentResult assess_deterministic(const DispatchMatrices& m,
                                      const Hyperbox& box,
                                      const DetOptions& opts = {});

}  // namespace gridflex
