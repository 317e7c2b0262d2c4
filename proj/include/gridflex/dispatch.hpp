#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridflex/network.hpp"

namespace gridflex {

/// Carry-over state from the previous dispatch interval.
struct IntervalState {
  Vec p_prev;  // |G| MW
  Vec e_prev;  // |E| MWh
};

struct DispatchConfig {
  double tau_margin = 0.2;            // budget = (1+margin) * nominal cost
  double ess_energy_step_hours = 1.0; // energy drawn per MW of storage output
  Vec slack_weights;                  // M1 + 2*M2 entries; empty = all ones
  bool include_storage = true;
};

/// One interval's feasible region in the abstract two-block form
///   a1 x <= h1 + hx1 xi      (inequalities)
///   a2 x  = h2 + hx2 xi      (equalities; single power balance row)
/// over shifted decision variables x >= 0. Column v stands for the original
/// variable minus var_shift[v]; generators are shifted by max(0, p_min) and
/// storage net output by -p_charge_max, so the dual cone of the violation
/// LP is exactly a1' mu + a2' nu <= 0.
struct DispatchMatrices {
  Eigen::MatrixXd a1;   // M1 x V
  Vec h1;               // M1
  Eigen::MatrixXd hx1;  // M1 x N
  Eigen::MatrixXd a2;   // M2 x V (M2 = 1)
  Vec h2;               // M2
  Eigen::MatrixXd hx2;  // M2 x N (row of ones)
  Vec var_shift;        // V; original value = shifted value + var_shift
  Vec cost_row;         // V, over shifted variables
  double cost_offset = 0.0;  // cost(original) = cost_row . x + cost_offset
  std::vector<std::string> row_labels;  // M1 + M2
  double tau = 0.0;           // budget row rhs in original cost units
  double nominal_cost = 0.0;  // cost of the defining nominal dispatch

  int rows_ineq() const { return static_cast<int>(a1.rows()); }
  int rows_eq() const { return static_cast<int>(a2.rows()); }
  int vars() const { return static_cast<int>(a1.cols()); }
  int n_buses() const { return static_cast<int>(hx1.cols()); }
};

struct NominalDispatch {
  Vec dispatch;  // V, original (unshifted) units: generator MW, storage net MW
  double cost = 0.0;
  IntervalState next_state;
};

/// Cost-minimizing dispatch at net load d_bar, without the budget row (its
/// optimum defines the budget). Throws InfeasibleError with offending row
/// labels when no feasible dispatch exists.
NominalDispatch solve_nominal_dispatch(const Network& net,
                                       const IntervalState& state,
                                       const Vec& d_bar,
                                       const DispatchConfig& cfg);

/// Assembles the interval's constraint blocks, including the cost budget row
/// (rhs = (1+tau_margin) * nominal cost at d_bar). d_bar empty means the
/// case's nominal loads.
DispatchMatrices build_matrices(const Network& net, const IntervalState& state,
                                const DispatchConfig& cfg,
                                const Vec& d_bar = Vec());

/// Violation measure: optimal value of
///   min w.u  s.t.  a1 x - u1 <= h1 + hx1 xi,  a2 x + u2p - u2m = h2 + hx2 xi,
///                  x, u >= 0.
/// Always finite and >= 0; zero iff xi is accommodated exactly.
double evaluate_phi(const DispatchMatrices& m, const Vec& xi,
                    const Vec& weights = Vec());

struct PhiDual {
  double value = 0.0;
  Vec mu;  // M1, in [-1, 0]
  Vec nu;  // M2, in [-1, 1]
};

/// Dual of evaluate_phi at unit weights:
///   max (h1 + hx1 xi).mu + (h2 + hx2 xi).nu
///   s.t. a1' mu + a2' nu <= 0,  mu in [-1,0],  nu in [-1,1].
PhiDual evaluate_phi_dual(const DispatchMatrices& m, const Vec& xi);

/// Text table of all rows with labels, for audit.
std::string dump_matrices(const DispatchMatrices& m);

}  // namespace gridflex
