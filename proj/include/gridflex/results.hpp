#pragma once

#include <optional>

namespace gridflex {

/// One sequential-dispatch interval's assessment outcome.
struct IntervalResult {
  int interval = 0;  // 1-based
  std::optional<double> lambda_det;
  std::optional<double> lambda_sto;
  int iterations_det = 0;
  int iterations_sto = 0;
  bool converged_det = false;
  bool converged_sto = false;
  double time_ms_det = 0.0;
  double time_ms_sto = 0.0;
  double dispatch_cost = 0.0;
};

}  // namespace gridflex
