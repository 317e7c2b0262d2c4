#pragma once

#include <vector>

#include "gridflex/assessment.hpp"
#include "gridflex/dispatch.hpp"
#include "gridflex/lp.hpp"
#include "gridflex/network.hpp"

namespace gridflex {

/// One feasibility cut harvested from the subproblem MILP: the vertex
/// pattern, the optimal dual multipliers, and the coefficients of the
/// master row  constant + lambda*lambda_coeff + sum_n w_coeff[n]*w_n <= beta
/// where w_n stands for the product lambda*gamma_n.
struct DroCut {
  std::vector<int> z_plus;  // N entries in {0,1}; 1 where delta_d[n] == 0
  Vec mu_star;              // M1
  Vec nu_a_star, nu_b_star; // M2 each, nu = nu_a - nu_b
  double constant = 0.0;
  double lambda_coeff_from_duals = 0.0;
  Vec w_coeff;              // N, -delta_d[n] * (2 z_plus[n] - 1)
};

struct DroOptions {
  double beta = 0.05;    // expected-violation budget
  double big_k = 100.0;  // gamma bound / McCormick constant
  double tolerance = 1e-6;
  int max_iter = 30;
  lp::MilpOptions milp;  // subproblem solver knobs
};

struct SubproblemResult {
  double psi = 0.0;  // max over vertices of phi(xi) - xi.gamma
  DroCut cut;
  bool converged = true;  // false when the MILP hit a node/pivot cap
};

/// Worst vertex of the box at level lambda, priced against gamma: maximizes
/// the dual violation objective minus xi.gamma over vertex patterns, via a
/// MILP with binaries z and McCormick-exact product variables for z*mu and
/// z*nu (products are only created where the xi-coupling coefficient is
/// nonzero; z is fixed where delta_d[n] == 0).
SubproblemResult solve_dro_subproblem(const DispatchMatrices& m,
                                      const Hyperbox& box, double lambda,
                                      const Vec& gamma,
                                      const DroOptions& opts = {});

struct MasterResult {
  double lambda = 1.0;
  Vec gamma;  // N
  Vec w;      // N, the relaxed lambda*gamma products
  bool feasible = true;
};

/// Relaxed master: max lambda subject to every cut row and the McCormick
/// envelopes w ~ lambda*gamma with |gamma| <= K. After fixing the optimal
/// lambda, gamma is re-selected by minimizing the worst cut row evaluated
/// with the exact product lambda*gamma (linear in gamma), which keeps the
/// certificate check sharp; see README. No cuts: lambda=1, gamma=0.
MasterResult solve_dro_master(const std::vector<DroCut>& cuts, int n_buses,
                              const DroOptions& opts);

/// Cutting-plane loop: master, subproblem, check d_bar.gamma + psi <= beta.
/// Returns lambda_star = 0 with a diagnostic when already phi(d_bar) > beta.
AssessmentResult assess_stochastic(const DispatchMatrices& m,
                                   const Hyperbox& box,
                                   const DroOptions& opts = {});

}  // namespace gridflex
