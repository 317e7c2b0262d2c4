#pragma once

// Internal bounded-variable revised simplex shared by solve_lp and the
// branch-and-bound layer. Not installed.

#include <memory>
#include <vector>

#include "gridflex/lp.hpp"

namespace gridflex::lp::detail {

enum class VStat : unsigned char { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<int> basic;    // column in basis for each row
  std::vector<VStat> stat;   // one per column (structural + logical)
};

/// Revised simplex over the computational form
///   min c'x,  A x = b,  lo <= x <= up
/// where A = [structural | logical] and every row carries one logical
/// column (slack for <= rows, fixed-at-zero for = rows). Columns are kept
/// sparse; the basis is refactorized with SparseLU and updated with
/// product-form etas between refactorizations.
class Simplex {
 public:
  Simplex(const LinearProgram& p, const Tolerances& tol);

  /// Mutate a structural variable's bounds between solves (branch and bound).
  void set_var_bounds(int j, double lo, double up);
  double var_lower(int j) const { return lo_[j]; }
  double var_upper(int j) const { return up_[j]; }

  SolverSolution solve();
  SolverSolution solve(const Basis& warm);

  Basis basis() const { return Basis{basic_, stat_}; }

 private:
  struct Eta {
    int row;
    Eigen::VectorXd col;  // B_prev^{-1} a_entering
  };

  void init_cold();
  void init_warm(const Basis& warm);
  SolverSolution run();

  void factorize();
  Eigen::VectorXd ftran(Eigen::VectorXd v) const;
  Eigen::VectorXd btran(Eigen::VectorXd v) const;
  void recompute_basic_values();

  // Returns entering column or -1. `reduced` receives the chosen reduced
  // cost; `bland` switches to first-index pricing.
  int price(const Eigen::VectorXd& y, const Eigen::VectorXd& cost, bool bland,
            double* reduced) const;

  bool nonbasic_movable(int j) const;

  int m_ = 0;       // rows
  int n_ = 0;       // structural columns
  int mi_ = 0;      // inequality rows (first mi_ rows)
  int ncols_ = 0;   // n_ + m_
  Sense sense_ = Sense::Minimize;

  SparseMat cols_;             // m_ x ncols_
  Eigen::VectorXd cost_;       // internal minimization costs
  Eigen::VectorXd lo_, up_;
  Eigen::VectorXd rhs_;

  Tolerances tol_;

  std::vector<VStat> stat_;
  std::vector<int> basic_;     // size m_
  std::vector<int> basis_row_; // column -> row or -1
  Eigen::VectorXd x_;

  mutable Eigen::SparseLU<SparseMat> lu_;  // adjoint() solve is non-const in Eigen
  std::vector<Eta> etas_;
  long pivots_ = 0;
  int degenerate_streak_ = 0;
};

}  // namespace gridflex::lp::detail
