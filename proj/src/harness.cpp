#include "gridflex/harness.hpp"

#include <algorithm>
#include <random>

#include "gridflex/deterministic.hpp"
#include "gridflex/errors.hpp"

namespace gridflex {
IntervalState startup_state(const Network& net, const DispatchConfig& dcfg) {
  CaseDocument doc = net.doc;
  double big = 1.0;
  for (const auto& g : doc.generators) big += g.p_max - std::min(0.0, g.p_min);
  for (auto& g : doc.generators) {
    g.ramp_up = big;
    g.ramp_down = big;
  }
  const Network boot = build_network(doc);

  const int ne = dcfg.include_storage ? boot.n_storage() : 0;
  IntervalState seed;
  seed.p_prev = Vec::Zero(boot.n_gens());
  for (int g = 0; g < boot.n_gens(); ++g)
    seed.p_prev[g] = std::max(0.0, doc.generators[g].p_min);
  seed.e_prev = Vec::Zero(ne);
  for (int s = 0; s < ne; ++s) seed.e_prev[s] = doc.storage[s].e_initial;

  const NominalDispatch nom =
      solve_nominal_dispatch(boot, seed, boot.load, dcfg);
  IntervalState out;
  out.p_prev = nom.next_state.p_prev;
  out.e_prev = seed.e_prev;  // the bootstrap consumes no stored energy
  return out;
}

namespace {

struct ScenarioAssessment {
  std::optional<double> lambda;
  int iterations = 0;
  bool converged = true;
  double time_ms = 0.0;
};

void fold_min(ScenarioAssessment& agg, const AssessmentResult& one) {
  agg.time_ms += one.wall_time_ms;
  agg.converged = agg.converged && one.converged;
  if (!agg.lambda || one.lambda_star < *agg.lambda) {
    agg.lambda = one.lambda_star;
    agg.iterations = one.iterations;
  }
}

}  // namespace

ScenarioSet generate_scenarios(const RunConfig& cfg, int count,
                               std::uint64_t seed) {
  if (count < 1) throw ValidationError("scenario count must be at least 1");
  ScenarioSet set;
  set.seed = seed;
  set.outlier_included = cfg.include_outlier;
  set.multipliers.resize(count, cfg.intervals);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick(0.99, 1.01);
  const int uniform_rows = cfg.include_outlier ? count - 1 : count;
  for (int s = 0; s < uniform_rows; ++s)
    for (int t = 0; t < cfg.intervals; ++t) set.multipliers(s, t) = pick(rng);
  if (cfg.include_outlier) set.multipliers.row(count - 1).setConstant(1.09);
  return set;
}

RunOutput run_sequence(const Network& net, const RunConfig& cfg,
                       const ScenarioSet* scenarios) {
  if (cfg.intervals < 1) throw ValidationError("intervals must be at least 1");
  if (cfg.delta_d_fraction < 0.0)
    throw ValidationError("delta_d_fraction must be nonnegative");
  if (scenarios && scenarios->multipliers.cols() < cfg.intervals)
    throw ValidationError("scenario set is shorter than the horizon");

  DispatchConfig dcfg = cfg.dispatch;
  dcfg.include_storage = cfg.include_storage;
  dcfg.ess_energy_step_hours = cfg.interval_minutes / 60.0;

  RunOutput out;
  IntervalState state;
  try {
    state = startup_state(net, dcfg);
  } catch (const InfeasibleError& e) {
    out.completed = false;
    out.diagnostic = std::string("startup dispatch infeasible: ") + e.what();
    return out;
  }

  const int n_scen =
      scenarios ? static_cast<int>(scenarios->multipliers.rows()) : 1;
  const Vec delta_d = cfg.delta_d_fraction * net.load;

  for (int t = 1; t <= cfg.intervals; ++t) {
    NominalDispatch nom;
    try {
      nom = solve_nominal_dispatch(net, state, net.load, dcfg);
    } catch (const InfeasibleError& e) {
      out.completed = false;
      out.diagnostic = "nominal dispatch infeasible at interval " +
                       std::to_string(t) + ": " + e.what();
      return out;
    }
    const DispatchMatrices m = build_matrices(net, state, dcfg, net.load);

    IntervalResult row;
    row.interval = t;
    row.dispatch_cost = nom.cost;

    ScenarioAssessment det, sto;
    for (int s = 0; s < n_scen; ++s) {
      Hyperbox box;
      box.d_bar =
          scenarios ? Vec(scenarios->multipliers(s, t - 1) * net.load)
                    : net.load;
      box.delta_d = delta_d;
      ScenarioTraceRow tr;
      tr.interval = t;
      tr.scenario = s + 1;
      if (cfg.mode != AssessMode::Sto) {
        const auto res = assess_deterministic(m, box);
        fold_min(det, res);
        tr.lambda_det = res.lambda_star;
      }
      if (cfg.mode != AssessMode::Det) {
        DroOptions opts = cfg.dro;
        opts.beta = cfg.beta;
        const auto res = assess_stochastic(m, box, opts);
        fold_min(sto, res);
        tr.lambda_sto = res.lambda_star;
      }
      if (scenarios) out.trace.push_back(tr);
    }
    if (cfg.mode != AssessMode::Sto) {
      row.lambda_det = det.lambda;
      row.iterations_det = det.iterations;
      row.converged_det = det.converged;
      row.time_ms_det = det.time_ms;
    }
    if (cfg.mode != AssessMode::Det) {
      row.lambda_sto = sto.lambda;
      row.iterations_sto = sto.iterations;
      row.converged_sto = sto.converged;
      row.time_ms_sto = sto.time_ms;
    }
    out.results.push_back(row);
    state = nom.next_state;
  }
  return out;
}

EssSensitivity run_ess_sensitivity(const Network& net, const RunConfig& cfg,
                                   const ScenarioSet* scenarios) {
  if (net.n_storage() == 0)
    throw ValidationError("storage sensitivity needs a case with storage");
  EssSensitivity pair;
  RunConfig with = cfg;
  with.include_storage = true;
  pair.with_storage = run_sequence(net, with, scenarios);
  RunConfig without = cfg;
  without.include_storage = false;
  pair.without_storage = run_sequence(net, without, scenarios);
  return pair;
}

}  // namespace gridflex
