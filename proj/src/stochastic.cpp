#include "gridflex/stochastic.hpp"

#include <chrono>
#include <cmath>
#include <vector>

#include "gridflex/errors.hpp"

namespace gridflex {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

Vec vertex_from_z(const Hyperbox& box, double lambda,
                  const std::vector<int>& z_plus) {
  Vec xi = box.d_bar;
  for (int n = 0; n < xi.size(); ++n)
    xi[n] += (z_plus[n] ? 1.0 : -1.0) * lambda * box.delta_d[n];
  return xi;
}

DroCut make_cut(const DispatchMatrices& m, const Hyperbox& box,
                const std::vector<int>& z_plus, const Vec& mu, const Vec& nu_a,
                const Vec& nu_b) {
  const int n = m.n_buses();
  DroCut cut;
  cut.z_plus = z_plus;
  cut.mu_star = mu;
  cut.nu_a_star = nu_a;
  cut.nu_b_star = nu_b;
  const Vec nu = nu_a - nu_b;
  const Vec q = m.hx1.transpose() * mu + m.hx2.transpose() * nu;  // N
  cut.constant = m.h1.dot(mu) + m.h2.dot(nu) + box.d_bar.dot(q);
  cut.w_coeff = Vec::Zero(n);
  cut.lambda_coeff_from_duals = 0.0;
  for (int b = 0; b < n; ++b) {
    const double sgn = z_plus[b] ? 1.0 : -1.0;
    cut.lambda_coeff_from_duals += box.delta_d[b] * sgn * q[b];
    cut.w_coeff[b] = -box.delta_d[b] * sgn;
  }
  return cut;
}

/// Marks inequality rows that stay strictly slack at every optimum of the
/// violation LP, for every xi in the full box (lambda = 1). Their dual
/// weight is zero in every dual optimum, so mu can be fixed at 0 and their
/// products never materialize.
///
/// Soundness: x = 0 is always feasible, so the optimal penalty total is at
/// most phi_cap (its cost at x = 0 over the worst xi). Any optimal x can
/// exceed a singleton-row bound ub_v only by paying that row's penalty, so
/// a1_r.x <= sum_v a1_rv * ub_v + phi_cap * max_v(a1_rv / a_def_v). A row
/// whose bound stays below its smallest rhs can never be tight.
std::vector<bool> slack_row_mask(const DispatchMatrices& m,
                                 const Hyperbox& box) {
  const int m1 = m.rows_ineq();
  const int m2 = m.rows_eq();
  const int nv = m.vars();

  Vec min_rhs(m1);
  for (int r = 0; r < m1; ++r) {
    double v = m.h1[r];
    for (int b = 0; b < m.n_buses(); ++b)
      v += m.hx1(r, b) * box.d_bar[b] -
           std::abs(m.hx1(r, b)) * box.delta_d[b];
    min_rhs[r] = v;
  }
  double phi_cap = 0.0;
  for (int r = 0; r < m1; ++r) phi_cap += std::max(0.0, -min_rhs[r]);
  for (int r = 0; r < m2; ++r) {
    double center = m.h2[r];
    double span = 0.0;
    for (int b = 0; b < m.n_buses(); ++b) {
      center += m.hx2(r, b) * box.d_bar[b];
      span += std::abs(m.hx2(r, b)) * box.delta_d[b];
    }
    phi_cap += std::abs(center) + span;
  }

  // Two sound per-variable bounds from singleton rows (a x_v <= h, penalty
  // u): "soft" gives x_v <= min_s (h_s + phi_cap)/a_s with a private budget;
  // "shared" keeps the hard bound of the largest-coefficient row and charges
  // the budget once per row via the worst sensitivity 1/a.
  Vec soft = Vec::Constant(nv, lp::kInf);
  Vec hard = Vec::Constant(nv, lp::kInf);
  Vec hard_a = Vec::Zero(nv);
  for (int r = 0; r < m1; ++r) {
    if (m.hx1.row(r).cwiseAbs().maxCoeff() != 0.0) continue;
    int nonzeros = 0, col = -1;
    for (int v = 0; v < nv; ++v)
      if (m.a1(r, v) != 0.0) {
        ++nonzeros;
        col = v;
      }
    if (nonzeros != 1 || m.a1(r, col) <= 0.0) continue;
    const double a = m.a1(r, col);
    soft[col] = std::min(soft[col], (m.h1[r] + phi_cap) / a);
    if (a > hard_a[col] ||
        (a == hard_a[col] && m.h1[r] / a < hard[col])) {
      hard_a[col] = a;
      hard[col] = m.h1[r] / a;
    }
  }

  std::vector<bool> slack(m1, false);
  for (int r = 0; r < m1; ++r) {
    double lhs_soft = 0.0, lhs_hard = 0.0, ratio_max = 0.0;
    bool bounded = true;
    for (int v = 0; v < nv && bounded; ++v) {
      const double a = m.a1(r, v);
      if (a <= 0.0) continue;  // x >= 0 is a hard bound; no penalty needed
      if (soft[v] == lp::kInf) {
        bounded = false;
      } else {
        lhs_soft += a * soft[v];
        lhs_hard += a * hard[v];
        ratio_max = std::max(ratio_max, a / hard_a[v]);
      }
    }
    if (!bounded) continue;
    const double lhs_max = std::min(lhs_soft, lhs_hard + phi_cap * ratio_max);
    slack[r] = lhs_max < min_rhs[r] - 1e-7 * (1.0 + std::abs(min_rhs[r]));
  }
  return slack;
}

}  // namespace

SubproblemResult solve_dro_subproblem(const DispatchMatrices& m,
                                      const Hyperbox& box, double lambda,
                                      const Vec& gamma,
                                      const DroOptions& opts) {
  const int m1 = m.rows_ineq();
  const int m2 = m.rows_eq();
  const int nv = m.vars();
  const int n = m.n_buses();
  validate_hyperbox(box, n);
  if (gamma.size() != n)
    throw ValidationError("gamma size does not match bus count");
  if (lambda < -1e-12 || lambda > 1.0 + 1e-12)
    throw ValidationError("lambda outside [0,1]");

  // Free vertex choices: only buses with a nonzero deviation get a binary.
  std::vector<int> zbus;
  for (int b = 0; b < n; ++b)
    if (box.delta_d[b] > 0.0) zbus.push_back(b);
  const int nz = static_cast<int>(zbus.size());

  // Product variables w = z * y, created only where the objective needs them
  // (xi-coupling coefficient nonzero).
  struct Prod {
    int zi;   // index into zbus
    int row;  // dual row index within its block
  };
  const std::vector<bool> slack = slack_row_mask(m, box);
  std::vector<Prod> p1, pa;  // z*mu pairs; z*nu pairs (a and b share pa)
  for (int zi = 0; zi < nz; ++zi) {
    for (int r = 0; r < m1; ++r)
      if (!slack[r] && m.hx1(r, zbus[zi]) != 0.0) p1.push_back({zi, r});
    for (int r = 0; r < m2; ++r)
      if (m.hx2(r, zbus[zi]) != 0.0) pa.push_back({zi, r});
  }
  const int np1 = static_cast<int>(p1.size());
  const int npa = static_cast<int>(pa.size());

  const int c_mu = 0;
  const int c_nua = m1;
  const int c_nub = m1 + m2;
  const int c_z = m1 + 2 * m2;
  const int c_w1 = c_z + nz;
  const int c_wa = c_w1 + np1;
  const int c_wb = c_wa + npa;
  const int ncols = c_wb + npa;

  lp::MixedBinaryProgram mbp;
  mbp.lp = lp::LinearProgram::sized(ncols, lp::Sense::Maximize);
  auto& p = mbp.lp;
  p.lower.setConstant(-1.0);
  p.upper.setConstant(0.0);
  for (int r = 0; r < m1; ++r)
    if (slack[r]) p.lower[c_mu + r] = 0.0;  // provably zero in every optimum
  for (int zi = 0; zi < nz; ++zi) {
    p.lower[c_z + zi] = 0.0;
    p.upper[c_z + zi] = 1.0;
    mbp.binaries.push_back(c_z + zi);
  }

  // Objective. With z- eliminated (z+ - z- = 2z - 1) and the product
  // substitution zy identities, each coupled dual variable y picks up
  // -lambda*delta.hx and its product 2*lambda*delta.hx.
  const Vec r1 = m.h1 + m.hx1 * box.d_bar;
  const Vec r2 = m.h2 + m.hx2 * box.d_bar;
  p.cost.segment(c_mu, m1) = r1;
  p.cost.segment(c_nua, m2) = r2;
  p.cost.segment(c_nub, m2) = -r2;
  for (int zi = 0; zi < nz; ++zi) {
    const int b = zbus[zi];
    const double d = lambda * box.delta_d[b];
    p.cost.segment(c_mu, m1) -= d * m.hx1.col(b);
    p.cost.segment(c_nua, m2) -= d * m.hx2.col(b);
    p.cost.segment(c_nub, m2) += d * m.hx2.col(b);
    p.cost[c_z + zi] = -2.0 * lambda * gamma[b] * box.delta_d[b];
  }
  for (int k = 0; k < np1; ++k)
    p.cost[c_w1 + k] =
        2.0 * lambda * box.delta_d[zbus[p1[k].zi]] * m.hx1(p1[k].row, zbus[p1[k].zi]);
  for (int k = 0; k < npa; ++k) {
    const double c =
        2.0 * lambda * box.delta_d[zbus[pa[k].zi]] * m.hx2(pa[k].row, zbus[pa[k].zi]);
    p.cost[c_wa + k] = c;
    p.cost[c_wb + k] = -c;
  }
  double constant = -gamma.dot(box.d_bar);
  for (int b = 0; b < n; ++b) constant += lambda * gamma[b] * box.delta_d[b];

  // Rows: dual feasibility a1'mu + a2'nu <= 0, then three envelope rows per
  // product (the fourth, w <= 0, is the variable bound).
  std::vector<Eigen::Triplet<double>> trips;
  const int nprod = np1 + 2 * npa;
  const int nrows = nv + 3 * nprod;
  Vec rhs = Vec::Zero(nrows);
  for (int v = 0; v < nv; ++v) {
    for (int r = 0; r < m1; ++r)
      if (m.a1(r, v) != 0.0) trips.emplace_back(v, c_mu + r, m.a1(r, v));
    for (int r = 0; r < m2; ++r)
      if (m.a2(r, v) != 0.0) {
        trips.emplace_back(v, c_nua + r, m.a2(r, v));
        trips.emplace_back(v, c_nub + r, -m.a2(r, v));
      }
  }
  int row = nv;
  auto envelope = [&](int wcol, int zcol, int ycol) {
    trips.emplace_back(row, wcol, -1.0);  // w >= -z
    trips.emplace_back(row, zcol, -1.0);
    rhs[row++] = 0.0;
    trips.emplace_back(row, ycol, 1.0);  // w >= y
    trips.emplace_back(row, wcol, -1.0);
    rhs[row++] = 0.0;
    trips.emplace_back(row, wcol, 1.0);  // w <= y - z + 1
    trips.emplace_back(row, ycol, -1.0);
    trips.emplace_back(row, zcol, 1.0);
    rhs[row++] = 1.0;
  };
  for (int k = 0; k < np1; ++k)
    envelope(c_w1 + k, c_z + p1[k].zi, c_mu + p1[k].row);
  for (int k = 0; k < npa; ++k)
    envelope(c_wa + k, c_z + pa[k].zi, c_nua + pa[k].row);
  for (int k = 0; k < npa; ++k)
    envelope(c_wb + k, c_z + pa[k].zi, c_nub + pa[k].row);

  p.ineq.resize(nrows, ncols);
  p.ineq.setFromTriplets(trips.begin(), trips.end());
  p.ineq_rhs = rhs;

  // Seed the search with the best of a few analytic vertex candidates; each
  // pattern's exact optimum is the dual violation LP at that vertex.
  lp::MilpOptions milp = opts.milp;
  {
    std::vector<std::vector<int>> cands;
    cands.emplace_back(n, 1);
    cands.emplace_back(n, 0);
    std::vector<int> anti(n, 0);
    for (int b = 0; b < n; ++b) anti[b] = gamma[b] < 0.0 ? 1 : 0;
    cands.push_back(std::move(anti));
    double best = -lp::kInf;
    for (const auto& zp : cands) {
      const Vec xi = vertex_from_z(box, lambda, zp);
      const PhiDual d = evaluate_phi_dual(m, xi);
      // A sound mask guarantees these duals vanish; if one does not, the
      // candidate cannot seed the restricted model.
      bool clean = true;
      for (int r = 0; r < m1 && clean; ++r)
        if (slack[r] && std::abs(d.mu[r]) > 1e-7) clean = false;
      if (!clean) continue;
      Vec inc = Vec::Zero(ncols);
      inc.segment(c_mu, m1) = d.mu;
      for (int r = 0; r < m1; ++r)
        if (slack[r]) inc[c_mu + r] = 0.0;
      for (int r = 0; r < m2; ++r) {
        inc[c_nua + r] = std::min(d.nu[r], 0.0);
        inc[c_nub + r] = std::min(-d.nu[r], 0.0);
      }
      for (int zi = 0; zi < nz; ++zi) inc[c_z + zi] = zp[zbus[zi]];
      for (int k = 0; k < np1; ++k)
        inc[c_w1 + k] = inc[c_z + p1[k].zi] * inc[c_mu + p1[k].row];
      for (int k = 0; k < npa; ++k) {
        inc[c_wa + k] = inc[c_z + pa[k].zi] * inc[c_nua + pa[k].row];
        inc[c_wb + k] = inc[c_z + pa[k].zi] * inc[c_nub + pa[k].row];
      }
      const double value = p.cost.dot(inc);
      if (value <= best) continue;
      best = value;
      milp.has_incumbent = true;
      milp.incumbent = std::move(inc);
      milp.incumbent_objective = value;
    }
  }

  auto s = lp::solve_milp(mbp, milp);
  if (s.status != lp::Status::Optimal &&
      s.status != lp::Status::IterationLimit)
    throw Error("subproblem MILP failed to produce a vertex");

  SubproblemResult out;
  out.converged = s.status == lp::Status::Optimal;
  out.psi = s.objective + constant;
  std::vector<int> z_plus(n, 1);  // immaterial entries default to +1
  for (int zi = 0; zi < nz; ++zi)
    z_plus[zbus[zi]] = s.primal[c_z + zi] > 0.5 ? 1 : 0;
  out.cut = make_cut(m, box, z_plus, s.primal.segment(c_mu, m1),
                     s.primal.segment(c_nua, m2), s.primal.segment(c_nub, m2));
  return out;
}

MasterResult solve_dro_master(const std::vector<DroCut>& cuts, int n_buses,
                              const DroOptions& opts) {
  MasterResult out;
  out.gamma = Vec::Zero(n_buses);
  out.w = Vec::Zero(n_buses);
  if (cuts.empty()) return out;  // lambda = 1, gamma pinned to 0

  const double big_k = opts.big_k;
  const int nc = static_cast<int>(cuts.size());
  const int n = n_buses;

  // Stage 1: max lambda over the McCormick relaxation w ~ lambda*gamma.
  {
    const int c_l = 0, c_g = 1, c_w = 1 + n;
    lp::LinearProgram p = lp::LinearProgram::sized(1 + 2 * n, lp::Sense::Maximize);
    p.cost[c_l] = 1.0;
    p.lower[c_l] = 0.0;
    p.upper[c_l] = 1.0;
    p.lower.segment(c_g, 2 * n).setConstant(-big_k);
    p.upper.segment(c_g, 2 * n).setConstant(big_k);

    std::vector<Eigen::Triplet<double>> trips;
    Vec rhs(nc + 4 * n);
    for (int k = 0; k < nc; ++k) {
      trips.emplace_back(k, c_l, cuts[k].lambda_coeff_from_duals);
      for (int b = 0; b < n; ++b)
        if (cuts[k].w_coeff[b] != 0.0)
          trips.emplace_back(k, c_w + b, cuts[k].w_coeff[b]);
      rhs[k] = opts.beta - cuts[k].constant;
    }
    int row = nc;
    for (int b = 0; b < n; ++b) {
      trips.emplace_back(row, c_w + b, -1.0);  // w >= -K*lambda
      trips.emplace_back(row, c_l, -big_k);
      rhs[row++] = 0.0;
      trips.emplace_back(row, c_g + b, 1.0);  // w >= gamma + K*lambda - K
      trips.emplace_back(row, c_l, big_k);
      trips.emplace_back(row, c_w + b, -1.0);
      rhs[row++] = big_k;
      trips.emplace_back(row, c_w + b, 1.0);  // w <= gamma - K*lambda + K
      trips.emplace_back(row, c_g + b, -1.0);
      trips.emplace_back(row, c_l, big_k);
      rhs[row++] = big_k;
      trips.emplace_back(row, c_w + b, 1.0);  // w <= K*lambda
      trips.emplace_back(row, c_l, -big_k);
      rhs[row++] = 0.0;
    }
    p.ineq.resize(nc + 4 * n, 1 + 2 * n);
    p.ineq.setFromTriplets(trips.begin(), trips.end());
    p.ineq_rhs = rhs;

    auto s = lp::solve_lp(p);
    if (s.status != lp::Status::Optimal) {
      out.lambda = 0.0;
      out.feasible = false;
      return out;
    }
    out.lambda = std::min(1.0, std::max(0.0, s.primal[c_l]));
  }

  // Stage 2: with lambda fixed, re-select gamma to minimize the worst cut
  // row under the exact product w = lambda*gamma. The relaxed stage-1 gamma
  // is arbitrary wherever the envelopes are slack; this one is certifiable.
  {
    const int c_t = 0, c_g = 1;
    lp::LinearProgram p = lp::LinearProgram::sized(1 + n, lp::Sense::Minimize);
    p.cost[c_t] = 1.0;
    p.lower.segment(c_g, n).setConstant(-big_k);
    p.upper.segment(c_g, n).setConstant(big_k);

    std::vector<Eigen::Triplet<double>> trips;
    Vec rhs(nc);
    for (int k = 0; k < nc; ++k) {
      trips.emplace_back(k, c_t, -1.0);
      for (int b = 0; b < n; ++b)
        if (cuts[k].w_coeff[b] != 0.0)
          trips.emplace_back(k, c_g + b, out.lambda * cuts[k].w_coeff[b]);
      rhs[k] = -(cuts[k].constant +
                 out.lambda * cuts[k].lambda_coeff_from_duals);
    }
    p.ineq.resize(nc, 1 + n);
    p.ineq.setFromTriplets(trips.begin(), trips.end());
    p.ineq_rhs = rhs;

    auto s = lp::solve_lp(p);
    if (s.status == lp::Status::Optimal) {
      out.gamma = s.primal.segment(c_g, n);
      out.w = out.lambda * out.gamma;
    }
  }
  return out;
}

AssessmentResult assess_stochastic(const DispatchMatrices& m,
                                   const Hyperbox& box,
                                   const DroOptions& opts) {
  const auto start = Clock::now();
  validate_hyperbox(box, m.n_buses());
  AssessmentResult res;

  if (evaluate_phi(m, box.d_bar) > opts.beta + opts.tolerance) {
    res.lambda_star = 0.0;
    res.converged = true;
    res.diagnostic = "nominal point already exceeds the violation budget";
    res.wall_time_ms = elapsed_ms(start);
    return res;
  }

  std::vector<DroCut> cuts;
  bool sub_capped = false;
  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    const MasterResult master = solve_dro_master(cuts, m.n_buses(), opts);
    if (!master.feasible) {
      res.lambda_star = 0.0;
      res.diagnostic = "master infeasible: even the degenerate box exceeds beta";
      break;
    }
    const SubproblemResult sub =
        solve_dro_subproblem(m, box, master.lambda, master.gamma, opts);
    sub_capped = sub_capped || !sub.converged;
    res.subproblem_values.push_back(sub.psi);

    const double check = box.d_bar.dot(master.gamma) + sub.psi;
    if (check <= opts.beta + opts.tolerance) {
      res.lambda_star = master.lambda;
      res.converged = true;
      if (master.gamma.size() &&
          master.gamma.cwiseAbs().maxCoeff() > 0.99 * opts.big_k)
        res.diagnostic = "warning: gamma reached its bound; raise big_k";
      break;
    }
    cuts.push_back(sub.cut);
    CutRecord rec;
    rec.constant = sub.cut.constant;
    rec.lambda_coeff = sub.cut.lambda_coeff_from_duals;
    rec.w_coeff = sub.cut.w_coeff;
    rec.z_plus = sub.cut.z_plus;
    res.cuts.push_back(std::move(rec));
  }
  if (!res.converged && res.diagnostic.empty()) {
    res.lambda_star = 0.0;  // no probe ever passed the check
    res.diagnostic = "iteration cap reached before the check condition held";
  }
  if (sub_capped)
    res.diagnostic += std::string(res.diagnostic.empty() ? "" : "; ") +
                      "subproblem hit a solver cap at least once";
  res.wall_time_ms = elapsed_ms(start);
  return res;
}

}  // namespace gridflex
