#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <string>
#include <vector>

namespace gridflex::lp {

using SparseMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

/// min/max c'y  s.t.  G y <= g,  E y = e,  lower <= y <= upper.
struct LinearProgram {
  Sense sense = Sense::Minimize;
  Vec cost;
  SparseMat ineq;  // G
  Vec ineq_rhs;    // g
  SparseMat eq;    // E
  Vec eq_rhs;      // e
  Vec lower;       // -inf allowed
  Vec upper;       // +inf allowed

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_ineq() const { return static_cast<int>(ineq_rhs.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }

  /// Convenience for a problem with n variables and no rows yet.
  static LinearProgram sized(int n, Sense sense = Sense::Minimize);

  /// Throws ValidationError on inconsistent dimensions or lower > upper.
  void check_well_formed() const;
};

/// A LinearProgram plus the set of variable indices restricted to {0,1}.
struct MixedBinaryProgram {
  LinearProgram lp;
  std::vector<int> binaries;

  void check_well_formed() const;
};

struct Tolerances {
  double feasibility = 1e-7;  // reported primal feasibility
  double pivot = 1e-9;        // smallest acceptable pivot magnitude
  double optimality = 1e-9;   // reduced-cost threshold
  int max_pivots = 50000;
  int bland_after_degenerate = 1000;
};

struct MilpOptions {
  Tolerances lp_tol;
  double abs_gap = 1e-6;
  long node_cap = 200000;
  int binary_cap = 64;
  /// Optional warm incumbent (full-length primal vector with integral
  /// binaries and its objective). Used only for pruning; the search still
  /// proves optimality.
  bool has_incumbent = false;
  Vec incumbent;
  double incumbent_objective = 0.0;
};

struct SolverSolution {
  Status status = Status::Infeasible;
  Vec primal;
  double objective = 0.0;
  /// Shadow prices, one per row, inequality rows first then equality rows:
  /// d(objective)/d(rhs). For a minimization, <=-row duals are <= 0.
  Vec row_duals;
  double bound_gap = 0.0;  // MILP only: |incumbent - best remaining bound|
  long pivots = 0;
  long nodes = 0;  // MILP only
  /// Rows left violated at the phase-1 optimum when status == Infeasible.
  std::vector<int> infeasible_rows;
};

SolverSolution solve_lp(const LinearProgram& p, const Tolerances& tol = {});

SolverSolution solve_milp(const MixedBinaryProgram& p,
                          const MilpOptions& opts = {});

/// Human-readable dump of a problem (and its binaries, if any) in the
/// LP-text grammar documented in the README. For cross-checking against
/// external solvers.
std::string dump_lp(const LinearProgram& p,
                    const std::vector<int>& binaries = {});

/// Backend seam: the bundled simplex kernel implements it; an external
/// solver can be swapped in behind the same contract.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual SolverSolution solve(const LinearProgram& p,
                               const Tolerances& tol) const = 0;
  virtual SolverSolution solve(const MixedBinaryProgram& p,
                               const MilpOptions& opts) const = 0;
};

/// The bundled kernel (bounded-variable revised simplex + branch and bound).
const SolverBackend& bundled_backend();

}  // namespace gridflex::lp
