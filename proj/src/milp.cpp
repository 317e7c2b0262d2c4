#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <queue>

#include "gridflex/errors.hpp"
#include "gridflex/lp.hpp"
#include "simplex.hpp"

namespace gridflex::lp {

namespace {

struct Node {
  std::uint64_t fix0 = 0;
  std::uint64_t fix1 = 0;
  double bound = 0.0;  // parent LP objective, internal (min) sense
  long serial = 0;
  std::shared_ptr<detail::Basis> warm;
};

struct NodeOrder {
  // Best-bound: smallest internal bound first; ties by insertion order.
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.serial > b.serial;
  }
};

}  // namespace

SolverSolution solve_milp(const MixedBinaryProgram& p, const MilpOptions& opts) {
  p.check_well_formed();
  const int nbin = static_cast<int>(p.binaries.size());
  if (nbin > opts.binary_cap || nbin > 64)
    throw ValidationError("binary count " + std::to_string(nbin) +
                          " exceeds the configured cap");

  const bool maximize = (p.lp.sense == Sense::Maximize);
  const double flip = maximize ? -1.0 : 1.0;

  detail::Simplex simplex(p.lp, opts.lp_tol);
  std::vector<double> root_lo(nbin), root_up(nbin);
  for (int k = 0; k < nbin; ++k) {
    root_lo[k] = simplex.var_lower(p.binaries[k]);
    root_up[k] = simplex.var_upper(p.binaries[k]);
  }

  auto apply_fixings = [&](const Node& nd) {
    for (int k = 0; k < nbin; ++k) {
      const int j = p.binaries[k];
      if (nd.fix0 >> k & 1)
        simplex.set_var_bounds(j, 0.0, 0.0);
      else if (nd.fix1 >> k & 1)
        simplex.set_var_bounds(j, 1.0, 1.0);
      else
        simplex.set_var_bounds(j, root_lo[k], root_up[k]);
    }
  };

  SolverSolution best;
  bool have_incumbent = false;
  double incumbent = kInf;  // internal (min) sense
  if (opts.has_incumbent) {
    if (opts.incumbent.size() != p.lp.num_vars())
      throw ValidationError("incumbent vector length mismatch");
    have_incumbent = true;
    incumbent = flip * opts.incumbent_objective;
    best.status = Status::Optimal;
    best.primal = opts.incumbent;
    best.objective = opts.incumbent_objective;
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long serial = 0;
  open.push(Node{0, 0, -kInf, serial++, nullptr});

  long nodes = 0;
  long total_pivots = 0;
  bool hit_cap = false;
  bool root_infeasible = false;
  bool root_unbounded = false;
  double best_open_bound = -kInf;

  while (!open.empty()) {
    if (nodes >= opts.node_cap) {
      hit_cap = true;
      best_open_bound = open.top().bound;
      break;
    }
    Node nd = open.top();
    open.pop();
    if (have_incumbent && nd.bound >= incumbent - 1e-9) continue;
    ++nodes;

    apply_fixings(nd);
    SolverSolution rel = nd.warm ? simplex.solve(*nd.warm) : simplex.solve();
    total_pivots += rel.pivots;
    if (rel.status == Status::Unbounded) {
      // An unbounded relaxation at the root makes the MILP unbounded (every
      // binary pattern inherits the ray through the continuous variables).
      root_unbounded = true;
      break;
    }
    if (rel.status == Status::IterationLimit) {
      hit_cap = true;
      best_open_bound = nd.bound;
      break;
    }
    if (rel.status == Status::Infeasible) {
      if (nodes == 1 && nd.fix0 == 0 && nd.fix1 == 0) root_infeasible = true;
      continue;
    }

    const double node_obj = flip * rel.objective;  // internal sense
    if (have_incumbent && node_obj >= incumbent - 1e-9) continue;

    // Most-fractional branching, ties by lowest index.
    int branch = -1;
    double best_frac = 1e-6;
    for (int k = 0; k < nbin; ++k) {
      const double v = rel.primal[p.binaries[k]];
      const double frac = std::min(v, 1.0 - v);
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        branch = k;
      }
    }

    if (branch < 0) {
      // Integral: new incumbent.
      have_incumbent = true;
      incumbent = node_obj;
      best = rel;
      continue;
    }

    const bool keep_basis = open.size() < 4096;
    auto warm = keep_basis
                    ? std::make_shared<detail::Basis>(simplex.basis())
                    : nullptr;
    Node child0{nd.fix0 | (1ull << branch), nd.fix1, node_obj, serial++, warm};
    Node child1{nd.fix0, nd.fix1 | (1ull << branch), node_obj, serial++, warm};
    open.push(std::move(child0));
    open.push(std::move(child1));
  }

  best.nodes = nodes;
  best.pivots = total_pivots;

  if (root_unbounded) {
    best.status = Status::Unbounded;
    return best;
  }
  if (hit_cap) {
    best.status = Status::IterationLimit;
    best.bound_gap =
        have_incumbent ? std::abs(incumbent - best_open_bound) : kInf;
    return best;
  }
  if (!have_incumbent) {
    (void)root_infeasible;
    best.status = Status::Infeasible;
    return best;
  }
  best.status = Status::Optimal;
  best.bound_gap = 0.0;
  best.row_duals.resize(0);  // no meaningful duals for a MIP
  return best;
}

}  // namespace gridflex::lp
