#pragma once

#include <string>
#include <vector>

#include "gridflex/results.hpp"

namespace gridflex {

/// Validated case data as read from disk. Power in MW, energy in MWh,
/// reactance in per-unit on base_mva.
struct CaseDocument {
  struct Bus {
    std::string id;
    double load_mw = 0.0;
    bool operator==(const Bus&) const = default;
  };
  struct Generator {
    std::string id;
    std::string bus;
    double p_min = 0.0;
    double p_max = 0.0;
    double ramp_up = 0.0;
    double ramp_down = 0.0;
    double cost = 0.0;  // per MW
    bool operator==(const Generator&) const = default;
  };
  struct Storage {
    std::string id;
    std::string bus;
    double e_min = 0.0;
    double e_max = 0.0;
    double e_initial = 0.0;
    double p_charge_max = 0.0;
    double p_discharge_max = 0.0;
    double cost = 0.0;  // per MW of net output
    bool operator==(const Storage&) const = default;
  };
  struct Line {
    std::string id;
    std::string from;
    std::string to;
    double reactance = 0.0;  // pu, > 0
    double flow_limit = 0.0;  // MW, > 0
    bool operator==(const Line&) const = default;
  };

  double base_mva = 100.0;
  std::string slack_bus;  // empty: lowest-index bus
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Storage> storage;
  std::vector<Line> lines;

  bool operator==(const CaseDocument&) const = default;
};

/// Checks every CaseDocument invariant; throws ValidationError naming the
/// offending entity. Both parsers call this before returning.
void validate_case(const CaseDocument& doc);

/// Strict JSON parser for the native schema; unknown keys are rejected.
CaseDocument parse_case_json(const std::string& text);

std::string serialize_case_json(const CaseDocument& doc);

struct MatpowerOptions {
  double ramp_fraction = 0.25;        // default ramp = fraction * p_max
  double unlimited_cap_factor = 10.0; // rateA == 0 -> factor * total load
};

/// MATPOWER-subset importer (assignments of scalars and numeric matrices).
/// Storage units are not representable in this format; see
/// merge_storage_sidecar.
CaseDocument parse_matpower_case(const std::string& text,
                                 const MatpowerOptions& opts = {});

/// Merges a sidecar JSON document of the form {"storage": [...]} (entries in
/// the native schema) into an imported case.
void merge_storage_sidecar(CaseDocument& doc, const std::string& sidecar_json);

/// CSV emission for per-interval assessment results. Header:
///   interval,lambda_det,lambda_sto,iterations_det,iterations_sto,
///   converged_det,converged_sto,time_ms_det,time_ms_sto
/// Lambdas carry 6 decimals; absent assessments print as empty fields. With
/// include_timings false the time columns stay empty so that repeated runs
/// are byte-identical.
std::string write_results_csv(const std::vector<IntervalResult>& results,
                              bool include_timings = true);

}  // namespace gridflex
