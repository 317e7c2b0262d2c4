#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridflex/case.hpp"
#include "gridflex/deterministic.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/harness.hpp"
#include "gridflex/oracle.hpp"
#include "gridflex/stochastic.hpp"

namespace {

using gridflex::Vec;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNoConvergence = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw gridflex::Error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw gridflex::Error("cannot open output file: " + path);
  out << text;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

gridflex::CaseDocument load_case(const std::string& path,
                                 const std::string& storage_sidecar) {
  gridflex::CaseDocument doc = ends_with(path, ".m")
                                   ? gridflex::parse_matpower_case(slurp(path))
                                   : gridflex::parse_case_json(slurp(path));
  if (!storage_sidecar.empty())
    gridflex::merge_storage_sidecar(doc, slurp(storage_sidecar));
  gridflex::validate_case(doc);
  return doc;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

gridflex::AssessMode parse_mode(const std::string& mode) {
  if (mode == "det") return gridflex::AssessMode::Det;
  if (mode == "sto") return gridflex::AssessMode::Sto;
  if (mode == "both") return gridflex::AssessMode::Both;
  throw gridflex::ValidationError("mode must be det, sto, or both");
}

Vec parse_vec(const ordered_json& arr, const std::string& where) {
  if (!arr.is_array())
    throw gridflex::SchemaError(where + " must be an array of numbers");
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw gridflex::SchemaError(where + " must contain only numbers");
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

gridflex::IntervalState parse_interval_state(const std::string& text) {
  ordered_json root = ordered_json::parse(text);
  if (!root.is_object())
    throw gridflex::SchemaError("interval state must be a JSON object");
  gridflex::IntervalState st;
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (it.key() == "p_prev")
      st.p_prev = parse_vec(it.value(), "p_prev");
    else if (it.key() == "e_prev")
      st.e_prev = parse_vec(it.value(), "e_prev");
    else
      throw gridflex::SchemaError("unknown interval state key: " + it.key());
  }
  return st;
}

double json_number(const ordered_json& v, const std::string& where) {
  if (!v.is_number())
    throw gridflex::SchemaError(where + " must be a number");
  return v.get<double>();
}

/// Config file mirroring the run options; every key optional.
gridflex::RunConfig parse_run_config(const std::string& text) {
  ordered_json root = ordered_json::parse(text);
  if (!root.is_object())
    throw gridflex::SchemaError("run config must be a JSON object");
  gridflex::RunConfig cfg;
  for (auto it = root.begin(); it != root.end(); ++it) {
    const std::string& key = it.key();
    const ordered_json& v = it.value();
    if (key == "intervals")
      cfg.intervals = static_cast<int>(json_number(v, key));
    else if (key == "interval_minutes")
      cfg.interval_minutes = json_number(v, key);
    else if (key == "delta_d_fraction")
      cfg.delta_d_fraction = json_number(v, key);
    else if (key == "beta")
      cfg.beta = json_number(v, key);
    else if (key == "mode")
      cfg.mode = parse_mode(v.is_string() ? v.get<std::string>() : "");
    else if (key == "include_storage")
      cfg.include_storage = v.is_boolean() && v.get<bool>();
    else if (key == "scenario_count")
      cfg.scenario_count = static_cast<int>(json_number(v, key));
    else if (key == "include_outlier")
      cfg.include_outlier = v.is_boolean() && v.get<bool>();
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(json_number(v, key));
    else if (key == "dispatch") {
      for (auto jt = v.begin(); jt != v.end(); ++jt) {
        if (jt.key() == "tau_margin")
          cfg.dispatch.tau_margin = json_number(jt.value(), "tau_margin");
        else
          throw gridflex::SchemaError("unknown dispatch config key: " +
                                      jt.key());
      }
    } else if (key == "dro") {
      for (auto jt = v.begin(); jt != v.end(); ++jt) {
        if (jt.key() == "big_k")
          cfg.dro.big_k = json_number(jt.value(), "big_k");
        else if (jt.key() == "tolerance")
          cfg.dro.tolerance = json_number(jt.value(), "tolerance");
        else if (jt.key() == "max_iter")
          cfg.dro.max_iter = static_cast<int>(json_number(jt.value(),
                                                          "max_iter"));
        else
          throw gridflex::SchemaError("unknown dro config key: " + jt.key());
      }
    } else {
      throw gridflex::SchemaError("unknown run config key: " + key);
    }
  }
  return cfg;
}

int cmd_validate(const std::string& case_path, const std::string& sidecar) {
  const auto doc = load_case(case_path, sidecar);
  const auto net = gridflex::build_network(doc);
  std::cout << "ok: buses=" << net.n_buses() << " generators=" << net.n_gens()
            << " storage=" << net.n_storage() << " lines=" << net.n_lines()
            << " slack=" << doc.buses[net.slack_index].id << "\n";
  return kExitOk;
}

int cmd_ptdf(const std::string& case_path, const std::string& sidecar,
             const std::string& out_path) {
  const auto doc = load_case(case_path, sidecar);
  const auto net = gridflex::build_network(doc);
  std::ostringstream csv;
  csv << "line";
  for (const auto& b : doc.buses) csv << "," << b.id;
  csv << "\n";
  for (int l = 0; l < net.n_lines(); ++l) {
    csv << doc.lines[l].id;
    for (int b = 0; b < net.n_buses(); ++b) csv << "," << fmt6(net.sf(b, l));
    csv << "\n";
  }
  if (out_path.empty())
    std::cout << csv.str();
  else
    spill(out_path, csv.str());
  return kExitOk;
}

int cmd_assess(const std::string& case_path, const std::string& sidecar,
               const std::string& state_path, const std::string& mode_name,
               double beta, double delta_fraction, double tau_margin,
               const std::string& out_path, bool timings) {
  const auto doc = load_case(case_path, sidecar);
  const auto net = gridflex::build_network(doc);
  const auto mode = parse_mode(mode_name);

  gridflex::DispatchConfig dcfg;
  dcfg.tau_margin = tau_margin;
  gridflex::IntervalState state = state_path.empty()
                                      ? gridflex::startup_state(net, dcfg)
                                      : parse_interval_state(slurp(state_path));
  const auto m = gridflex::build_matrices(net, state, dcfg);
  gridflex::Hyperbox box;
  box.d_bar = net.load;
  box.delta_d = delta_fraction * net.load;

  gridflex::IntervalResult row;
  row.interval = 1;
  bool converged = true;
  std::string line;
  if (mode != gridflex::AssessMode::Sto) {
    const auto res = gridflex::assess_deterministic(m, box);
    row.lambda_det = res.lambda_star;
    row.iterations_det = res.iterations;
    row.converged_det = res.converged;
    row.time_ms_det = res.wall_time_ms;
    converged = converged && res.converged;
    line += "lambda_det=" + fmt6(res.lambda_star);
  }
  if (mode != gridflex::AssessMode::Det) {
    gridflex::DroOptions opts;
    opts.beta = beta;
    const auto res = gridflex::assess_stochastic(m, box, opts);
    row.lambda_sto = res.lambda_star;
    row.iterations_sto = res.iterations;
    row.converged_sto = res.converged;
    row.time_ms_sto = res.wall_time_ms;
    converged = converged && res.converged;
    if (!line.empty()) line += " ";
    line += "lambda_sto=" + fmt6(res.lambda_star);
  }
  std::cout << line << "\n";
  if (!out_path.empty())
    spill(out_path, gridflex::write_results_csv({row}, timings));
  return converged ? kExitOk : kExitNoConvergence;
}

int cmd_run(const std::string& case_path, const std::string& sidecar,
            const std::string& config_path, const std::string& out_path,
            bool timings, const CLI::App* sub, std::string mode_name,
            double beta, int intervals, double delta_fraction, int scenarios,
            bool outlier, std::uint64_t seed) {
  const auto doc = load_case(case_path, sidecar);
  const auto net = gridflex::build_network(doc);

  gridflex::RunConfig cfg;
  if (!config_path.empty()) cfg = parse_run_config(slurp(config_path));
  if (sub->count("--mode")) cfg.mode = parse_mode(mode_name);
  if (sub->count("--beta")) cfg.beta = beta;
  if (sub->count("--intervals")) cfg.intervals = intervals;
  if (sub->count("--delta-fraction")) cfg.delta_d_fraction = delta_fraction;
  if (sub->count("--scenarios")) cfg.scenario_count = scenarios;
  if (sub->count("--outlier")) cfg.include_outlier = outlier;
  if (sub->count("--seed")) cfg.seed = seed;

  std::optional<gridflex::ScenarioSet> scen;
  if (cfg.scenario_count > 1 || cfg.include_outlier)
    scen = gridflex::generate_scenarios(cfg, cfg.scenario_count, cfg.seed);
  const auto out =
      gridflex::run_sequence(net, cfg, scen ? &*scen : nullptr);

  const std::string csv = gridflex::write_results_csv(out.results, timings);
  if (out_path.empty())
    std::cout << csv;
  else
    spill(out_path, csv);

  bool converged = out.completed;
  for (const auto& r : out.results) {
    if (r.lambda_det && !r.converged_det) converged = false;
    if (r.lambda_sto && !r.converged_sto) converged = false;
  }
  if (!out.diagnostic.empty()) std::cerr << out.diagnostic << "\n";
  return converged ? kExitOk : kExitNoConvergence;
}

int cmd_oracle(const std::string& case_path, const std::string& sidecar,
               const CLI::App* sub, double lambda, double beta,
               double delta_fraction, double tau_margin) {
  const auto doc = load_case(case_path, sidecar);
  const auto net = gridflex::build_network(doc);
  gridflex::DispatchConfig dcfg;
  dcfg.tau_margin = tau_margin;
  const auto state = gridflex::startup_state(net, dcfg);
  const auto m = gridflex::build_matrices(net, state, dcfg);
  gridflex::Hyperbox box;
  box.d_bar = net.load;
  box.delta_d = delta_fraction * net.load;

  if (sub->count("--lambda")) {
    double worst = 0.0;
    for (const auto& v : gridflex::enumerate_vertex_phis(m, box, lambda))
      worst = std::max(worst, v.phi);
    std::cout << "worst_phi=" << fmt6(worst) << " worst_expectation="
              << fmt6(gridflex::worst_expectation_oracle(m, box, lambda))
              << "\n";
  }
  std::cout << "lambda_det_oracle=" << fmt6(gridflex::det_lambda_oracle(m, box))
            << " lambda_sto_oracle="
            << fmt6(gridflex::sto_lambda_oracle(m, box, beta)) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "gridflex: tolerated net-load hyperbox assessment for sequential "
      "economic dispatch"};
  app.require_subcommand(1);

  std::string case_path, sidecar, out_path, state_path, config_path;
  std::string mode_name = "both";
  double beta = 0.05;
  double delta_fraction = 2.0;
  double tau_margin = 0.2;
  double lambda = 0.0;
  int intervals = 24;
  int scenarios = 1;
  bool outlier = false;
  bool timings = false;
  std::uint64_t seed = 0;

  auto add_case = [&](CLI::App* sub) {
    sub->add_option("case", case_path, "case file (.json native or .m import)")
        ->required();
    sub->add_option("--storage", sidecar,
                    "storage sidecar JSON merged into the case");
  };

  auto* validate = app.add_subcommand(
      "validate", "parse a case and run all structural checks");
  add_case(validate);

  auto* ptdf = app.add_subcommand(
      "ptdf", "emit the line-to-bus shift factor matrix as CSV");
  add_case(ptdf);
  ptdf->add_option("--out", out_path, "output CSV path (default stdout)");

  auto* assess = app.add_subcommand(
      "assess", "single-interval flexibility assessment");
  add_case(assess);
  assess->add_option("--interval-state", state_path,
                     "JSON with p_prev/e_prev arrays (default: startup "
                     "dispatch at nominal load)");
  assess->add_option("--mode", mode_name, "det, sto, or both")
      ->default_str("both");
  assess->add_option("--beta", beta, "expected-violation budget")
      ->default_val(0.05);
  assess->add_option("--delta-fraction", delta_fraction,
                     "hyperbox half-width as a fraction of nominal load")
      ->default_val(2.0);
  assess->add_option("--tau-margin", tau_margin,
                     "dispatch cost budget margin over the nominal cost")
      ->default_val(0.2);
  assess->add_option("--out", out_path, "also write a one-row results CSV");
  assess->add_flag("--timings", timings, "include wall times in the CSV");

  auto* run = app.add_subcommand(
      "run", "sequential dispatch over a horizon with per-interval assessment");
  add_case(run);
  run->add_option("--config", config_path,
                  "JSON run configuration; flags below override it");
  run->add_option("--out", out_path, "output CSV path (default stdout)");
  run->add_option("--mode", mode_name, "det, sto, or both");
  run->add_option("--beta", beta, "expected-violation budget");
  run->add_option("--intervals", intervals, "number of intervals");
  run->add_option("--delta-fraction", delta_fraction,
                  "hyperbox half-width as a fraction of nominal load");
  run->add_option("--scenarios", scenarios, "number of load scenarios");
  run->add_flag("--outlier", outlier, "append an all-1.09 outlier scenario");
  run->add_option("--seed", seed, "scenario RNG seed");
  run->add_flag("--timings", timings, "include wall times in the CSV");

  auto* oracle = app.add_subcommand(
      "oracle", "brute-force reference values (small bus counts only)");
  add_case(oracle);
  oracle->add_option("--lambda", lambda,
                     "also report worst-case values at this box scale");
  oracle->add_option("--beta", beta, "expected-violation budget")
      ->default_val(0.05);
  oracle->add_option("--delta-fraction", delta_fraction,
                     "hyperbox half-width as a fraction of nominal load")
      ->default_val(2.0);
  oracle->add_option("--tau-margin", tau_margin,
                     "dispatch cost budget margin over the nominal cost")
      ->default_val(0.2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(case_path, sidecar);
    if (ptdf->parsed()) return cmd_ptdf(case_path, sidecar, out_path);
    if (assess->parsed())
      return cmd_assess(case_path, sidecar, state_path, mode_name, beta,
                        delta_fraction, tau_margin, out_path, timings);
    if (run->parsed())
      return cmd_run(case_path, sidecar, config_path, out_path, timings, run,
                     mode_name, beta, intervals, delta_fraction, scenarios,
                     outlier, seed);
    if (oracle->parsed())
      return cmd_oracle(case_path, sidecar, oracle, lambda, beta,
                        delta_fraction, tau_margin);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const gridflex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
