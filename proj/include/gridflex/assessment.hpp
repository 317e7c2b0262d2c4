#pragma once

#include <string>
#include <vector>

#include "gridflex/network.hpp"

namespace gridflex {

/// One accepted cutting plane: feasible lambda must satisfy
///   constant + lambda * lambda_coeff + sum_n w_coeff[n] * (lambda*gamma[n])
///     <= budget
/// (budget 0 and empty w_coeff in the deterministic assessment).
struct CutRecord {
  double constant = 0.0;
  double lambda_coeff = 0.0;
  Vec w_coeff;              // N, empty for deterministic cuts
  std::vector<int> z_plus;  // generating vertex pattern, one entry per bus
};

struct AssessmentResult {
  double lambda_star = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<CutRecord> cuts;
  std::vector<double> subproblem_values;  // psi per iteration
  double wall_time_ms = 0.0;
  std::string diagnostic;  // nonempty on short-circuit or non-convergence
};

}  // namespace gridflex
