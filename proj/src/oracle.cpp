#include "gridflex/oracle.hpp"

#include <cmath>

#include "gridflex/errors.hpp"
#include "gridflex/lp.hpp"

namespace gridflex {
namespace {

Vec vertex(const Hyperbox& box, double lambda, unsigned long mask) {
  Vec xi = box.d_bar;
  for (int n = 0; n < xi.size(); ++n)
    xi[n] += (mask >> n & 1 ? 1.0 : -1.0) * lambda * box.delta_d[n];
  return xi;
}

/// Generic bisection for sup{lambda in [0,1] : g(lambda) <= tol} where g is
/// nondecreasing and g(0) <= tol is already verified by the caller.
template <typename G>
double bisect_sup(G&& g, double tol) {
  if (g(1.0) <= tol) return 1.0;
  double lo = 0.0, hi = 1.0;
  // 2^-30 < 1e-9: comfortably inside every certification tolerance used.
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= tol ? lo : hi) = mid;
  }
  return lo;
}

void check_size(const DispatchMatrices& m, const Hyperbox& box, int max_n) {
  validate_hyperbox(box, m.n_buses());
  if (m.n_buses() > max_n)
    throw ValidationError("oracle refuses systems with more than " +
                          std::to_string(max_n) + " buses");
}

}  // namespace

std::vector<VertexPhi> enumerate_vertex_phis(const DispatchMatrices& m,
                                             const Hyperbox& box,
                                             double lambda) {
  check_size(m, box, 20);
  const int n = m.n_buses();
  std::vector<VertexPhi> out;
  out.reserve(1ul << n);
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    VertexPhi v;
    for (int b = 0; b < n; ++b) v.sign.push_back(mask >> b & 1 ? 1 : -1);
    v.phi = evaluate_phi(m, vertex(box, lambda, mask));
    out.push_back(std::move(v));
  }
  return out;
}

double det_lambda_oracle(const DispatchMatrices& m, const Hyperbox& box,
                         double tol) {
  check_size(m, box, 20);
  if (evaluate_phi(m, box.d_bar) > tol) return 0.0;
  auto g = [&](double lambda) {
    double worst = 0.0;
    for (const auto& v : enumerate_vertex_phis(m, box, lambda))
      worst = std::max(worst, v.phi);
    return worst;
  };
  return bisect_sup(g, tol);
}

double worst_expectation_oracle(const DispatchMatrices& m, const Hyperbox& box,
                                double lambda) {
  check_size(m, box, 12);
  const int n = m.n_buses();
  const unsigned long nv = 1ul << n;

  // max sum_v p_v phi(xi_v)  s.t.  sum p_v = 1,  sum p_v xi_v = d_bar, p >= 0.
  // The mean rows reduce to sum_v p_v s_{v,n} * lambda*delta_d[n] = 0.
  lp::LinearProgram p =
      lp::LinearProgram::sized(static_cast<int>(nv), lp::Sense::Maximize);
  for (unsigned long mask = 0; mask < nv; ++mask)
    p.cost[static_cast<int>(mask)] = evaluate_phi(m, vertex(box, lambda, mask));
  Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(n + 1, static_cast<int>(nv));
  for (unsigned long mask = 0; mask < nv; ++mask) {
    eq(0, static_cast<int>(mask)) = 1.0;
    for (int b = 0; b < n; ++b)
      eq(1 + b, static_cast<int>(mask)) =
          (mask >> b & 1 ? 1.0 : -1.0) * lambda * box.delta_d[b];
  }
  p.eq = eq.sparseView();
  p.eq_rhs = Vec::Zero(n + 1);
  p.eq_rhs[0] = 1.0;
  p.lower = Vec::Zero(static_cast<int>(nv));

  auto s = lp::solve_lp(p);
  if (s.status != lp::Status::Optimal)
    throw Error("worst-expectation oracle LP did not solve");
  return s.objective;
}

double sto_lambda_oracle(const DispatchMatrices& m, const Hyperbox& box,
                         double beta, double tol) {
  check_size(m, box, 12);
  if (evaluate_phi(m, box.d_bar) > beta + tol) return 0.0;
  auto g = [&](double lambda) {
    return worst_expectation_oracle(m, box, lambda);
  };
  return bisect_sup(g, beta + tol);
}

}  // namespace gridflex
