#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gridflex/case.hpp"

namespace gridflex {

using Vec = Eigen::VectorXd;

struct LineTopology {
  int from = 0;
  int to = 0;
  double reactance = 0.0;  // pu, > 0
};

/// Shift-factor (PTDF) matrix, |B| x |L|. Column l maps nodal injections to
/// the MW flow on line l, oriented from -> to; the slack row is zero.
/// Computed by factorizing the reduced nodal susceptance matrix (slack
/// row/column removed) and back-solving once per line.
Eigen::MatrixXd compute_ptdf(int n_buses, const std::vector<LineTopology>& lines,
                             int slack_index);

/// Immutable dense-indexed network. Entity order matches the CaseDocument
/// (file order); ids are resolved to indices once here.
struct Network {
  CaseDocument doc;
  std::unordered_map<std::string, int> bus_index;
  std::vector<int> gen_bus;      // |G|
  std::vector<int> storage_bus;  // |E|
  std::vector<int> line_from;    // |L|
  std::vector<int> line_to;      // |L|
  int slack_index = 0;
  Vec load;            // |B| nominal MW
  Eigen::MatrixXd sf;  // |B| x |L|

  int n_buses() const { return static_cast<int>(doc.buses.size()); }
  int n_gens() const { return static_cast<int>(doc.generators.size()); }
  int n_storage() const { return static_cast<int>(doc.storage.size()); }
  int n_lines() const { return static_cast<int>(doc.lines.size()); }
};

/// Resolves ids, checks connectivity from the slack bus, computes sf.
/// The slack is the case's slack_bus, or bus 0 when unspecified.
Network build_network(const CaseDocument& doc);

/// Axis-aligned net-load uncertainty box: at level lambda in [0,1] the
/// admissible loads are d_bar +/- lambda * delta_d.
struct Hyperbox {
  Vec d_bar;    // |B| MW
  Vec delta_d;  // |B| MW, elementwise >= 0
};

/// Throws ValidationError unless delta_d >= 0, sizes match, and the lambda=1
/// corners are finite.
void validate_hyperbox(const Hyperbox& box, int n_buses);

}  // namespace gridflex
