#include "gridflex/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridflex/errors.hpp"
#include "simplex.hpp"

namespace gridflex::lp {

LinearProgram LinearProgram::sized(int n, Sense sense) {
  LinearProgram p;
  p.sense = sense;
  p.cost = Vec::Zero(n);
  p.ineq.resize(0, n);
  p.ineq_rhs.resize(0);
  p.eq.resize(0, n);
  p.eq_rhs.resize(0);
  p.lower = Vec::Constant(n, -kInf);
  p.upper = Vec::Constant(n, kInf);
  return p;
}

void LinearProgram::check_well_formed() const {
  const int n = num_vars();
  if (lower.size() != n || upper.size() != n)
    throw ValidationError("LP bound vectors do not match variable count");
  if (ineq.cols() != n || eq.cols() != n)
    throw ValidationError("LP constraint matrix width does not match variable count");
  if (ineq.rows() != ineq_rhs.size() || eq.rows() != eq_rhs.size())
    throw ValidationError("LP rhs length does not match row count");
  for (int j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]))
      throw ValidationError("LP bound is NaN for variable " + std::to_string(j));
    if (lower[j] > upper[j])
      throw ValidationError("LP lower bound exceeds upper bound for variable " +
                            std::to_string(j));
  }
}

void MixedBinaryProgram::check_well_formed() const {
  lp.check_well_formed();
  for (int j : binaries) {
    if (j < 0 || j >= lp.num_vars())
      throw ValidationError("binary index out of range: " + std::to_string(j));
    if (lp.lower[j] < -1e-12 || lp.upper[j] > 1.0 + 1e-12)
      throw ValidationError("binary variable " + std::to_string(j) +
                            " must have bounds within [0,1]");
  }
}

namespace detail {

namespace {
constexpr double kPrimalTol = 1e-9;   // internal bound-violation threshold
constexpr double kDegenTol = 1e-11;
constexpr int kRefactorEvery = 64;
}  // namespace

Simplex::Simplex(const LinearProgram& p, const Tolerances& tol)
    : m_(p.num_ineq() + p.num_eq()),
      n_(p.num_vars()),
      mi_(p.num_ineq()),
      ncols_(p.num_vars() + p.num_ineq() + p.num_eq()),
      sense_(p.sense),
      tol_(tol) {
  cost_ = Vec::Zero(ncols_);
  cost_.head(n_) = (sense_ == Sense::Maximize) ? Vec(-p.cost) : p.cost;

  lo_ = Vec::Constant(ncols_, 0.0);
  up_ = Vec::Constant(ncols_, 0.0);
  lo_.head(n_) = p.lower;
  up_.head(n_) = p.upper;
  for (int i = 0; i < mi_; ++i) up_[n_ + i] = kInf;  // slack of a <= row
  // equality logicals stay fixed at zero

  rhs_.resize(m_);
  rhs_.head(mi_) = p.ineq_rhs;
  rhs_.tail(m_ - mi_) = p.eq_rhs;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(p.ineq.nonZeros() + p.eq.nonZeros() + m_));
  for (int j = 0; j < n_; ++j) {
    for (SparseMat::InnerIterator it(p.ineq, j); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), j, it.value());
    for (SparseMat::InnerIterator it(p.eq, j); it; ++it)
      trips.emplace_back(mi_ + static_cast<int>(it.row()), j, it.value());
  }
  for (int i = 0; i < m_; ++i) trips.emplace_back(i, n_ + i, 1.0);
  cols_.resize(m_, ncols_);
  cols_.setFromTriplets(trips.begin(), trips.end());
}

void Simplex::set_var_bounds(int j, double lo, double up) {
  lo_[j] = lo;
  up_[j] = up;
}

void Simplex::factorize() {
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < m_; ++i) {
    const int j = basic_[i];
    for (SparseMat::InnerIterator it(cols_, j); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), i, it.value());
  }
  SparseMat b(m_, m_);
  b.setFromTriplets(trips.begin(), trips.end());
  lu_.compute(b);
  if (lu_.info() != Eigen::Success)
    throw Error("simplex basis factorization failed (singular basis)");
  etas_.clear();
}

Eigen::VectorXd Simplex::ftran(Eigen::VectorXd v) const {
  Eigen::VectorXd y = lu_.solve(v);
  for (const Eta& e : etas_) {
    const double zr = y[e.row] / e.col[e.row];
    y.noalias() -= zr * e.col;
    y[e.row] = zr;
  }
  return y;
}

Eigen::VectorXd Simplex::btran(Eigen::VectorXd v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    const double vr = v[it->row];
    const double dot = it->col.dot(v);
    v[it->row] = (vr - (dot - it->col[it->row] * vr)) / it->col[it->row];
  }
  return lu_.adjoint().solve(v);
}

void Simplex::recompute_basic_values() {
  for (int j = 0; j < ncols_; ++j) {
    switch (stat_[j]) {
      case VStat::AtLower: x_[j] = lo_[j]; break;
      case VStat::AtUpper: x_[j] = up_[j]; break;
      case VStat::Free: x_[j] = 0.0; break;
      case VStat::Basic: break;
    }
  }
  Eigen::VectorXd r = rhs_;
  for (int j = 0; j < ncols_; ++j) {
    if (stat_[j] == VStat::Basic || x_[j] == 0.0) continue;
    for (SparseMat::InnerIterator it(cols_, j); it; ++it)
      r[it.row()] -= it.value() * x_[j];
  }
  const Eigen::VectorXd xb = ftran(r);
  for (int i = 0; i < m_; ++i) x_[basic_[i]] = xb[i];
}

void Simplex::init_cold() {
  stat_.assign(ncols_, VStat::AtLower);
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lo_[j]))
      stat_[j] = VStat::AtLower;
    else if (std::isfinite(up_[j]))
      stat_[j] = VStat::AtUpper;
    else
      stat_[j] = VStat::Free;
  }
  basic_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    basic_[i] = n_ + i;
    stat_[n_ + i] = VStat::Basic;
  }
  basis_row_.assign(ncols_, -1);
  for (int i = 0; i < m_; ++i) basis_row_[basic_[i]] = i;
  x_ = Vec::Zero(ncols_);
}

void Simplex::init_warm(const Basis& warm) {
  stat_ = warm.stat;
  basic_ = warm.basic;
  basis_row_.assign(ncols_, -1);
  for (int i = 0; i < m_; ++i) basis_row_[basic_[i]] = i;
  x_ = Vec::Zero(ncols_);
  // A nonbasic variable whose finite bound vanished gets re-anchored.
  for (int j = 0; j < ncols_; ++j) {
    if (stat_[j] == VStat::AtLower && !std::isfinite(lo_[j]))
      stat_[j] = std::isfinite(up_[j]) ? VStat::AtUpper : VStat::Free;
    if (stat_[j] == VStat::AtUpper && !std::isfinite(up_[j]))
      stat_[j] = std::isfinite(lo_[j]) ? VStat::AtLower : VStat::Free;
  }
}

bool Simplex::nonbasic_movable(int j) const {
  if (stat_[j] == VStat::Basic) return false;
  if (stat_[j] == VStat::Free) return true;
  return up_[j] - lo_[j] > 1e-12;  // fixed variables never enter
}

int Simplex::price(const Eigen::VectorXd& y, const Eigen::VectorXd& cost,
                   bool bland, double* reduced) const {
  int best = -1;
  double best_mag = 0.0;
  for (int j = 0; j < ncols_; ++j) {
    if (!nonbasic_movable(j)) continue;
    double d = cost[j];
    for (SparseMat::InnerIterator it(cols_, j); it; ++it)
      d -= y[it.row()] * it.value();
    const double eps = tol_.optimality;
    bool eligible = false;
    switch (stat_[j]) {
      case VStat::AtLower: eligible = d < -eps; break;
      case VStat::AtUpper: eligible = d > eps; break;
      case VStat::Free: eligible = std::abs(d) > eps; break;
      case VStat::Basic: break;
    }
    if (!eligible) continue;
    if (bland) {
      *reduced = d;
      return j;
    }
    if (std::abs(d) > best_mag) {
      best_mag = std::abs(d);
      best = j;
      *reduced = d;
    }
  }
  return best;
}

SolverSolution Simplex::solve() {
  init_cold();
  return run();
}

SolverSolution Simplex::solve(const Basis& warm) {
  init_warm(warm);
  return run();
}

SolverSolution Simplex::run() {
  SolverSolution out;
  pivots_ = 0;
  degenerate_streak_ = 0;

  if (m_ == 0) {
    // No rows: each variable sits at its cheapest bound.
    out.primal = Vec::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      const double c = cost_[j];
      double v = 0.0;
      if (c > 0.0) {
        if (!std::isfinite(lo_[j])) { out.status = Status::Unbounded; return out; }
        v = lo_[j];
      } else if (c < 0.0) {
        if (!std::isfinite(up_[j])) { out.status = Status::Unbounded; return out; }
        v = up_[j];
      } else {
        v = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(up_[j]) ? up_[j] : 0.0);
      }
      out.primal[j] = v;
    }
    const double obj = cost_.head(n_).dot(out.primal);
    out.objective = (sense_ == Sense::Maximize) ? -obj : obj;
    out.status = Status::Optimal;
    out.row_duals.resize(0);
    return out;
  }

  factorize();
  recompute_basic_values();

  // Phase flags: 1 while any basic variable violates its bounds.
  Eigen::VectorXd zero_cost;  // lazily sized phase-1 nonbasic costs
  std::vector<signed char> d(m_, 0);

  auto classify = [&]() {
    int infeas = 0;
    for (int i = 0; i < m_; ++i) {
      const int j = basic_[i];
      if (x_[j] < lo_[j] - kPrimalTol) {
        d[i] = -1;
        ++infeas;
      } else if (x_[j] > up_[j] + kPrimalTol) {
        d[i] = 1;
        ++infeas;
      } else {
        d[i] = 0;
      }
    }
    return infeas;
  };

  bool phase1 = classify() > 0;
  int repair_attempts = 0;
  Eigen::VectorXd cb(m_);

  while (true) {
    if (pivots_ >= tol_.max_pivots) {
      out.status = Status::IterationLimit;
      out.pivots = pivots_;
      out.primal = x_.head(n_);
      const double obj = cost_.head(n_).dot(out.primal);
      out.objective = (sense_ == Sense::Maximize) ? -obj : obj;
      return out;
    }

    if (phase1) {
      if (classify() == 0) {
        phase1 = false;
        continue;
      }
      for (int i = 0; i < m_; ++i) cb[i] = static_cast<double>(d[i]);
    } else {
      for (int i = 0; i < m_; ++i) cb[i] = cost_[basic_[i]];
    }

    const Eigen::VectorXd y = btran(cb);
    const bool bland = degenerate_streak_ > tol_.bland_after_degenerate;
    double rc = 0.0;
    int enter;
    if (phase1) {
      if (zero_cost.size() == 0) zero_cost = Vec::Zero(ncols_);
      enter = price(y, zero_cost, bland, &rc);
    } else {
      enter = price(y, cost_, bland, &rc);
    }

    if (enter < 0) {
      if (phase1) {
        // Phase-1 optimum with residual infeasibility.
        double worst = 0.0;
        for (int i = 0; i < m_; ++i) {
          const int j = basic_[i];
          const double viol =
              std::max(lo_[j] - x_[j], x_[j] - up_[j]);
          worst = std::max(worst, viol);
          if (viol > tol_.feasibility) out.infeasible_rows.push_back(i);
        }
        if (worst <= tol_.feasibility) {
          // Feasible within the reported tolerance; accept and optimize.
          out.infeasible_rows.clear();
          phase1 = false;
          std::fill(d.begin(), d.end(), 0);
          continue;
        }
        out.status = Status::Infeasible;
        out.pivots = pivots_;
        out.primal = x_.head(n_);
        return out;
      }
      // Phase-2 optimal candidate; verify numerics before declaring.
      factorize();
      recompute_basic_values();
      if (classify() > 0 && repair_attempts < 3) {
        ++repair_attempts;
        phase1 = true;
        continue;
      }
      break;
    }

    const double sigma =
        (stat_[enter] == VStat::AtUpper)
            ? -1.0
            : (stat_[enter] == VStat::Free ? (rc < 0.0 ? 1.0 : -1.0) : 1.0);

    Eigen::VectorXd aj = Vec::Zero(m_);
    for (SparseMat::InnerIterator it(cols_, enter); it; ++it)
      aj[it.row()] = it.value();
    const Eigen::VectorXd w = ftran(aj);

    // Ratio test. Candidate step for each basic row plus the entering
    // variable's own opposite bound (a bound flip).
    const double own_range =
        (stat_[enter] == VStat::Free) ? kInf : up_[enter] - lo_[enter];

    auto candidate = [&](int i, double* t_out, double* bound_out) -> bool {
      const int j = basic_[i];
      const double delta = -sigma * w[i];
      if (std::abs(delta) <= tol_.pivot) return false;
      const double v = x_[j];
      if (phase1) {
        switch (d[i]) {
          case 0:
            if (delta > 0.0 && std::isfinite(up_[j])) {
              *t_out = (up_[j] - v) / delta;
              *bound_out = up_[j];
              return true;
            }
            if (delta < 0.0 && std::isfinite(lo_[j])) {
              *t_out = (v - lo_[j]) / (-delta);
              *bound_out = lo_[j];
              return true;
            }
            return false;
          case -1:  // below lower; blocks when climbing back to it
            if (delta > 0.0) {
              *t_out = (lo_[j] - v) / delta;
              *bound_out = lo_[j];
              return true;
            }
            return false;
          default:  // above upper; blocks when descending back to it
            if (delta < 0.0) {
              *t_out = (v - up_[j]) / (-delta);
              *bound_out = up_[j];
              return true;
            }
            return false;
        }
      }
      if (delta > 0.0 && std::isfinite(up_[j])) {
        *t_out = (up_[j] - v) / delta;
        *bound_out = up_[j];
        return true;
      }
      if (delta < 0.0 && std::isfinite(lo_[j])) {
        *t_out = (v - lo_[j]) / (-delta);
        *bound_out = lo_[j];
        return true;
      }
      return false;
    };

    double t_rows = kInf;
    for (int i = 0; i < m_; ++i) {
      double t, bd;
      if (candidate(i, &t, &bd)) t_rows = std::min(t_rows, std::max(t, 0.0));
    }

    if (!std::isfinite(t_rows) && !std::isfinite(own_range)) {
      if (phase1)
        throw Error("phase-1 ratio test found no blocking variable");
      out.status = Status::Unbounded;
      out.pivots = pivots_;
      return out;
    }

    const bool flip = own_range <= t_rows;
    int leave = -1;
    double leave_bound = 0.0;
    double step = 0.0;
    if (flip) {
      step = own_range;
    } else {
      // Harris-lite second pass: among near-minimal ratios prefer the
      // largest pivot magnitude; ties go to the lowest row index.
      double best_pivot = 0.0;
      double leave_t = 0.0;
      for (int i = 0; i < m_; ++i) {
        double t, bd;
        if (!candidate(i, &t, &bd)) continue;
        if (std::max(t, 0.0) <= t_rows + 1e-10 && std::abs(w[i]) > best_pivot) {
          best_pivot = std::abs(w[i]);
          leave = i;
          leave_bound = bd;
          leave_t = std::max(t, 0.0);
        }
      }
      step = leave_t;
    }

    // Apply the move.
    for (int i = 0; i < m_; ++i) x_[basic_[i]] -= sigma * step * w[i];
    x_[enter] += sigma * step;

    if (step <= kDegenTol)
      ++degenerate_streak_;
    else
      degenerate_streak_ = 0;

    if (flip) {
      stat_[enter] =
          (stat_[enter] == VStat::AtLower) ? VStat::AtUpper : VStat::AtLower;
      x_[enter] = (stat_[enter] == VStat::AtLower) ? lo_[enter] : up_[enter];
    } else {
      const int bl = basic_[leave];
      x_[bl] = leave_bound;
      stat_[bl] = (leave_bound == lo_[bl]) ? VStat::AtLower : VStat::AtUpper;
      basic_[leave] = enter;
      basis_row_[bl] = -1;
      basis_row_[enter] = leave;
      stat_[enter] = VStat::Basic;
      etas_.push_back(Eta{leave, w});
      if (static_cast<int>(etas_.size()) >= kRefactorEvery) {
        factorize();
        recompute_basic_values();
      }
    }
    ++pivots_;

    if (phase1 && classify() == 0) phase1 = false;
  }

  // Optimal: clean recomputation, then duals.
  factorize();
  recompute_basic_values();

  out.status = Status::Optimal;
  out.pivots = pivots_;
  out.primal = x_.head(n_);
  const double obj = cost_.head(n_).dot(out.primal);
  out.objective = (sense_ == Sense::Maximize) ? -obj : obj;

  for (int i = 0; i < m_; ++i) cb[i] = cost_[basic_[i]];
  Eigen::VectorXd y = btran(cb);
  if (sense_ == Sense::Maximize) y = -y;
  out.row_duals = y;
  return out;
}

}  // namespace detail

SolverSolution solve_lp(const LinearProgram& p, const Tolerances& tol) {
  p.check_well_formed();
  detail::Simplex s(p, tol);
  return s.solve();
}

std::string dump_lp(const LinearProgram& p, const std::vector<int>& binaries) {
  std::ostringstream os;
  os.precision(17);
  os << (p.sense == Sense::Maximize ? "maximize" : "minimize") << "\n obj:";
  for (int j = 0; j < p.num_vars(); ++j)
    if (p.cost[j] != 0.0) os << " " << std::showpos << p.cost[j] << std::noshowpos
                             << " x" << j;
  os << "\nsubject to\n";
  auto row_terms = [&os](const SparseMat& mat, int r) {
    for (int j = 0; j < mat.cols(); ++j)
      for (SparseMat::InnerIterator it(mat, j); it; ++it)
        if (it.row() == r)
          os << " " << std::showpos << it.value() << std::noshowpos << " x" << j;
  };
  SparseMat ineq_row = p.ineq;  // row-wise access below is O(nnz) per row; fine at kernel scale
  for (int r = 0; r < p.num_ineq(); ++r) {
    os << " c" << r << ":";
    row_terms(ineq_row, r);
    os << " <= " << p.ineq_rhs[r] << "\n";
  }
  for (int r = 0; r < p.num_eq(); ++r) {
    os << " e" << r << ":";
    row_terms(p.eq, r);
    os << " = " << p.eq_rhs[r] << "\n";
  }
  os << "bounds\n";
  for (int j = 0; j < p.num_vars(); ++j)
    os << " " << p.lower[j] << " <= x" << j << " <= " << p.upper[j] << "\n";
  if (!binaries.empty()) {
    os << "binary\n";
    for (int j : binaries) os << " x" << j;
    os << "\n";
  }
  os << "end\n";
  return os.str();
}

namespace {
class BundledBackend final : public SolverBackend {
 public:
  SolverSolution solve(const LinearProgram& p,
                       const Tolerances& tol) const override {
    return solve_lp(p, tol);
  }
  SolverSolution solve(const MixedBinaryProgram& p,
                       const MilpOptions& opts) const override {
    return solve_milp(p, opts);
  }
};
}  // namespace

const SolverBackend& bundled_backend() {
  static BundledBackend backend;
  return backend;
}

}  // namespace gridflex::lp
