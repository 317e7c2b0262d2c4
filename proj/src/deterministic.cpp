#include "gridflex/deterministic.hpp"

#include <chrono>
#include <cmath>

#include "gridflex/stochastic.hpp"

namespace gridflex {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

/// max lambda in [0,1] with c0_k + lambda*c1_k <= 0 for all cuts; closed
/// form because the master is one-dimensional.
double master_lambda(const std::vector<CutRecord>& cuts, double tol) {
  double ub = 1.0;
  for (const auto& c : cuts) {
    if (c.lambda_coeff > tol) {
      ub = std::min(ub, -c.constant / c.lambda_coeff);
    } else if (c.constant > tol) {
      return 0.0;  // violated for every lambda
    }
  }
  return std::max(0.0, ub);
}

}  // namespace

WorstCase worst_case_violation(const DispatchMatrices& m, const Hyperbox& box,
                               double lambda) {
  DroOptions opts;
  const SubproblemResult sub =
      solve_dro_subproblem(m, box, lambda, Vec::Zero(m.n_buses()), opts);
  WorstCase out;
  out.psi = sub.psi;
  out.z_plus = sub.cut.z_plus;
  out.mu = sub.cut.mu_star;
  out.nu = sub.cut.nu_a_star - sub.cut.nu_b_star;
  out.converged = sub.converged;
  return out;
}

AssessmentResult assess_deterministic(const DispatchMatrices& m,
                                      const Hyperbox& box,
                                      const DetOptions& opts) {
  const auto start = Clock::now();
  validate_hyperbox(box, m.n_buses());
  AssessmentResult res;

  if (evaluate_phi(m, box.d_bar) > opts.tolerance) {
    res.lambda_star = 0.0;
    res.converged = true;
    res.diagnostic = "nominal point is itself infeasible";
    res.wall_time_ms = elapsed_ms(start);
    return res;
  }

  DroOptions sub_opts;  // gamma = 0: shared subproblem, default solver knobs
  const Vec zero_gamma = Vec::Zero(m.n_buses());
  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    const double lambda = master_lambda(res.cuts, opts.tolerance);
    const SubproblemResult sub =
        solve_dro_subproblem(m, box, lambda, zero_gamma, sub_opts);
    res.subproblem_values.push_back(sub.psi);
    if (sub.psi <= opts.tolerance) {
      res.lambda_star = lambda;
      res.converged = true;
      break;
    }
    CutRecord rec;
    rec.constant = sub.cut.constant;
    rec.lambda_coeff = sub.cut.lambda_coeff_from_duals;
    rec.z_plus = sub.cut.z_plus;
    res.cuts.push_back(std::move(rec));
  }
  if (!res.converged) {
    res.lambda_star = 0.0;  // no probe was certified feasible
    res.diagnostic = "iteration cap reached before separation certified";
  }
  res.wall_time_ms = elapsed_ms(start);
  return res;
}

}  // namespace gridflex
