#include "gridflex/dispatch.hpp"

#include <cmath>
#include <sstream>

#include "gridflex/errors.hpp"
#include "gridflex/lp.hpp"

namespace gridflex {
namespace {

constexpr double kStateTol = 1e-6;

struct Core {
  Eigen::MatrixXd a1, hx1, a2, hx2;
  Vec h1, h2;
  Vec shift;     // V
  Vec cost;      // V (identical in original and shifted variables)
  std::vector<std::string> labels;  // ineq rows, then the balance row
};

void check_state(const Network& net, const IntervalState& state,
                 const DispatchConfig& cfg) {
  const int ng = net.n_gens();
  const int ne = cfg.include_storage ? net.n_storage() : 0;
  if (state.p_prev.size() != ng)
    throw ValidationError("p_prev size does not match generator count");
  if (cfg.include_storage && state.e_prev.size() != ne)
    throw ValidationError("e_prev size does not match storage count");
  for (int g = 0; g < ng; ++g) {
    const auto& gen = net.doc.generators[g];
    if (state.p_prev[g] < gen.p_min - kStateTol ||
        state.p_prev[g] > gen.p_max + kStateTol)
      throw ValidationError("p_prev outside capacity for generator " + gen.id);
  }
  for (int s = 0; s < ne; ++s) {
    const auto& ess = net.doc.storage[s];
    if (state.e_prev[s] < ess.e_min - kStateTol ||
        state.e_prev[s] > ess.e_max + kStateTol)
      throw ValidationError("e_prev outside energy window for storage " +
                            ess.id);
  }
}

/// Builds all rows except the cost budget, in shifted variables.
Core assemble_core(const Network& net, const IntervalState& state,
                   const DispatchConfig& cfg) {
  check_state(net, state, cfg);
  const int ng = net.n_gens();
  const int ne = cfg.include_storage ? net.n_storage() : 0;
  const int nb = net.n_buses();
  const int nl = net.n_lines();
  const int nv = ng + ne;
  const double dt = cfg.ess_energy_step_hours;

  Core c;
  c.shift = Vec::Zero(nv);
  c.cost = Vec::Zero(nv);
  for (int g = 0; g < ng; ++g) {
    c.shift[g] = std::max(0.0, net.doc.generators[g].p_min);
    c.cost[g] = net.doc.generators[g].cost;
  }
  for (int s = 0; s < ne; ++s) {
    c.shift[ng + s] = -net.doc.storage[s].p_charge_max;
    c.cost[ng + s] = net.doc.storage[s].cost;
  }

  const int m1 = 2 * ng + 2 * ng + 4 * ne + 2 * nl;
  c.a1 = Eigen::MatrixXd::Zero(m1, nv);
  c.hx1 = Eigen::MatrixXd::Zero(m1, nb);
  c.h1 = Vec::Zero(m1);
  c.labels.reserve(m1 + 1);
  int r = 0;
  auto rhs0 = Vec::Zero(m1).eval();  // rhs before the variable shift

  for (int g = 0; g < ng; ++g, ++r) {
    c.a1(r, g) = 1.0;
    rhs0[r] = net.doc.generators[g].p_max;
    c.labels.push_back("gen_upper:" + net.doc.generators[g].id);
  }
  for (int g = 0; g < ng; ++g, ++r) {
    c.a1(r, g) = -1.0;
    rhs0[r] = -net.doc.generators[g].p_min;
    c.labels.push_back("gen_lower:" + net.doc.generators[g].id);
  }
  for (int g = 0; g < ng; ++g, ++r) {
    c.a1(r, g) = 1.0;
    rhs0[r] = net.doc.generators[g].ramp_up + state.p_prev[g];
    c.labels.push_back("ramp_up:" + net.doc.generators[g].id);
  }
  for (int g = 0; g < ng; ++g, ++r) {
    c.a1(r, g) = -1.0;
    rhs0[r] = net.doc.generators[g].ramp_down - state.p_prev[g];
    c.labels.push_back("ramp_down:" + net.doc.generators[g].id);
  }
  for (int s = 0; s < ne; ++s) {
    const auto& ess = net.doc.storage[s];
    c.a1(r, ng + s) = -dt;
    rhs0[r] = ess.e_max - state.e_prev[s];
    c.labels.push_back("ess_energy_max:" + ess.id);
    ++r;
    c.a1(r, ng + s) = dt;
    rhs0[r] = state.e_prev[s] - ess.e_min;
    c.labels.push_back("ess_energy_min:" + ess.id);
    ++r;
  }
  for (int s = 0; s < ne; ++s) {
    const auto& ess = net.doc.storage[s];
    c.a1(r, ng + s) = 1.0;
    rhs0[r] = ess.p_discharge_max;
    c.labels.push_back("ess_power_max:" + ess.id);
    ++r;
    c.a1(r, ng + s) = -1.0;
    rhs0[r] = ess.p_charge_max;
    c.labels.push_back("ess_power_min:" + ess.id);
    ++r;
  }
  for (int l = 0; l < nl; ++l) {
    // flow_l = sum_b sf[b,l] * (injection at b); injections are generator and
    // storage output minus the uncertain load xi.
    Eigen::RowVectorXd arow = Eigen::RowVectorXd::Zero(nv);
    for (int g = 0; g < ng; ++g) arow[g] = net.sf(net.gen_bus[g], l);
    for (int s = 0; s < ne; ++s) arow[ng + s] = net.sf(net.storage_bus[s], l);
    const double limit = net.doc.lines[l].flow_limit;
    c.a1.row(r) = arow;
    c.hx1.row(r) = net.sf.col(l).transpose();
    rhs0[r] = limit;
    c.labels.push_back("line_plus:" + net.doc.lines[l].id);
    ++r;
    c.a1.row(r) = -arow;
    c.hx1.row(r) = -net.sf.col(l).transpose();
    rhs0[r] = limit;
    c.labels.push_back("line_minus:" + net.doc.lines[l].id);
    ++r;
  }
  c.h1 = rhs0 - c.a1 * c.shift;

  c.a2 = Eigen::MatrixXd::Ones(1, nv);
  c.hx2 = Eigen::MatrixXd::Ones(1, nb);
  c.h2 = Vec::Constant(1, -c.shift.sum());
  c.labels.push_back("balance");
  return c;
}

lp::SparseMat sparse(const Eigen::MatrixXd& m) {
  return m.sparseView().pruned();
}

}  // namespace

NominalDispatch solve_nominal_dispatch(const Network& net,
                                       const IntervalState& state,
                                       const Vec& d_bar,
                                       const DispatchConfig& cfg) {
  Core c = assemble_core(net, state, cfg);
  const int nv = static_cast<int>(c.cost.size());
  if (d_bar.size() != net.n_buses())
    throw ValidationError("d_bar size does not match bus count");

  lp::LinearProgram p = lp::LinearProgram::sized(nv, lp::Sense::Minimize);
  p.cost = c.cost;
  p.ineq = sparse(c.a1);
  p.ineq_rhs = c.h1 + c.hx1 * d_bar;
  p.eq = sparse(c.a2);
  p.eq_rhs = c.h2 + c.hx2 * d_bar;
  p.lower = Vec::Zero(nv);

  auto s = lp::solve_lp(p);
  if (s.status == lp::Status::Infeasible) {
    std::vector<std::string> rows;
    const int m1 = static_cast<int>(c.h1.size());
    for (int i : s.infeasible_rows)
      rows.push_back(i < m1 ? c.labels[i] : c.labels.back());
    throw InfeasibleError("nominal dispatch infeasible", rows);
  }
  if (s.status != lp::Status::Optimal)
    throw Error("nominal dispatch solve failed");

  NominalDispatch out;
  out.dispatch = s.primal + c.shift;
  out.cost = s.objective + c.cost.dot(c.shift);
  out.next_state.p_prev = out.dispatch.head(net.n_gens());
  const int ne = cfg.include_storage ? net.n_storage() : 0;
  out.next_state.e_prev = Vec::Zero(ne);
  for (int i = 0; i < ne; ++i)
    out.next_state.e_prev[i] =
        state.e_prev[i] -
        out.dispatch[net.n_gens() + i] * cfg.ess_energy_step_hours;
  return out;
}

DispatchMatrices build_matrices(const Network& net, const IntervalState& state,
                                const DispatchConfig& cfg, const Vec& d_bar) {
  const Vec d = d_bar.size() ? d_bar : net.load;
  const NominalDispatch nom = solve_nominal_dispatch(net, state, d, cfg);
  Core c = assemble_core(net, state, cfg);
  const int nv = static_cast<int>(c.cost.size());
  const int m1 = static_cast<int>(c.h1.size());

  DispatchMatrices m;
  m.var_shift = c.shift;
  m.cost_row = c.cost;
  m.cost_offset = c.cost.dot(c.shift);
  m.nominal_cost = nom.cost;
  m.tau = (1.0 + cfg.tau_margin) * nom.cost;

  m.a1 = Eigen::MatrixXd::Zero(m1 + 1, nv);
  m.a1.topRows(m1) = c.a1;
  m.a1.row(m1) = c.cost.transpose();
  m.h1 = Vec::Zero(m1 + 1);
  m.h1.head(m1) = c.h1;
  m.h1[m1] = m.tau - m.cost_offset;
  m.hx1 = Eigen::MatrixXd::Zero(m1 + 1, net.n_buses());
  m.hx1.topRows(m1) = c.hx1;

  m.a2 = c.a2;
  m.h2 = c.h2;
  m.hx2 = c.hx2;

  m.row_labels = c.labels;  // ineq labels + "balance"
  m.row_labels.insert(m.row_labels.end() - 1, "budget");
  return m;
}

double evaluate_phi(const DispatchMatrices& m, const Vec& xi,
                    const Vec& weights) {
  const int m1 = m.rows_ineq();
  const int m2 = m.rows_eq();
  const int nv = m.vars();
  if (xi.size() != m.n_buses())
    throw ValidationError("xi size does not match bus count");
  Vec w = weights.size() ? weights : Vec::Ones(m1 + 2 * m2);
  if (w.size() != m1 + 2 * m2)
    throw ValidationError("slack weight vector has wrong size");

  const int total = nv + m1 + 2 * m2;
  lp::LinearProgram p = lp::LinearProgram::sized(total, lp::Sense::Minimize);
  p.cost.tail(m1 + 2 * m2) = w;
  Eigen::MatrixXd gi = Eigen::MatrixXd::Zero(m1, total);
  gi.leftCols(nv) = m.a1;
  gi.block(0, nv, m1, m1) = -Eigen::MatrixXd::Identity(m1, m1);
  p.ineq = sparse(gi);
  p.ineq_rhs = m.h1 + m.hx1 * xi;
  Eigen::MatrixXd ge = Eigen::MatrixXd::Zero(m2, total);
  ge.leftCols(nv) = m.a2;
  ge.block(0, nv + m1, m2, m2) = Eigen::MatrixXd::Identity(m2, m2);
  ge.block(0, nv + m1 + m2, m2, m2) = -Eigen::MatrixXd::Identity(m2, m2);
  p.eq = sparse(ge);
  p.eq_rhs = m.h2 + m.hx2 * xi;
  p.lower = Vec::Zero(total);

  auto s = lp::solve_lp(p);
  if (s.status != lp::Status::Optimal)
    throw Error("violation LP did not solve to optimality");
  return s.objective;
}

PhiDual evaluate_phi_dual(const DispatchMatrices& m, const Vec& xi) {
  const int m1 = m.rows_ineq();
  const int m2 = m.rows_eq();
  const int nv = m.vars();
  if (xi.size() != m.n_buses())
    throw ValidationError("xi size does not match bus count");

  lp::LinearProgram p = lp::LinearProgram::sized(m1 + m2, lp::Sense::Maximize);
  p.cost.head(m1) = m.h1 + m.hx1 * xi;
  p.cost.tail(m2) = m.h2 + m.hx2 * xi;
  Eigen::MatrixXd g(nv, m1 + m2);
  g.leftCols(m1) = m.a1.transpose();
  g.rightCols(m2) = m.a2.transpose();
  p.ineq = sparse(g);
  p.ineq_rhs = Vec::Zero(nv);
  p.lower.head(m1) = Vec::Constant(m1, -1.0);
  p.upper.head(m1) = Vec::Zero(m1);
  p.lower.tail(m2) = Vec::Constant(m2, -1.0);
  p.upper.tail(m2) = Vec::Ones(m2);

  auto s = lp::solve_lp(p);
  if (s.status != lp::Status::Optimal)
    throw Error("dual violation LP did not solve to optimality");
  PhiDual out;
  out.value = s.objective;
  out.mu = s.primal.head(m1);
  out.nu = s.primal.tail(m2);
  return out;
}

std::string dump_matrices(const DispatchMatrices& m) {
  std::ostringstream out;
  const int m1 = m.rows_ineq();
  for (int i = 0; i < m1 + m.rows_eq(); ++i) {
    const bool eq = i >= m1;
    out << m.row_labels[i] << ": ";
    const auto row = eq ? m.a2.row(i - m1) : m.a1.row(i);
    for (int v = 0; v < m.vars(); ++v) {
      if (row[v] == 0.0) continue;
      out << (row[v] >= 0 ? "+" : "") << row[v] << "*x" << v << " ";
    }
    out << (eq ? "= " : "<= ") << (eq ? m.h2[i - m1] : m.h1[i]);
    const auto hx = eq ? m.hx2.row(i - m1) : m.hx1.row(i);
    for (int b = 0; b < m.n_buses(); ++b)
      if (hx[b] != 0.0)
        out << (hx[b] >= 0 ? " +" : " ") << hx[b] << "*xi" << b;
    out << "\n";
  }
  return out.str();
}

}  // namespace gridflex
