#include "gridflex/network.hpp"

#include <cmath>
#include <queue>

#include "gridflex/errors.hpp"

namespace gridflex {

Eigen::MatrixXd compute_ptdf(int n_buses, const std::vector<LineTopology>& lines,
                             int slack_index) {
  const int nl = static_cast<int>(lines.size());
  Eigen::MatrixXd sf = Eigen::MatrixXd::Zero(n_buses, nl);
  if (n_buses <= 1 || nl == 0) return sf;

  // Nodal susceptance matrix with the slack row/column removed. Bus b > slack
  // maps to reduced index b - 1.
  const int nr = n_buses - 1;
  auto red = [&](int b) { return b < slack_index ? b : b - 1; };
  Eigen::MatrixXd b_red = Eigen::MatrixXd::Zero(nr, nr);
  for (const auto& l : lines) {
    if (!(l.reactance > 0.0))
      throw NetworkError("degenerate reactance on a line");
    const double b = 1.0 / l.reactance;
    if (l.from != slack_index) b_red(red(l.from), red(l.from)) += b;
    if (l.to != slack_index) b_red(red(l.to), red(l.to)) += b;
    if (l.from != slack_index && l.to != slack_index) {
      b_red(red(l.from), red(l.to)) -= b;
      b_red(red(l.to), red(l.from)) -= b;
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b_red);
  for (int j = 0; j < nl; ++j) {
    Vec rhs = Vec::Zero(nr);
    const double b = 1.0 / lines[j].reactance;
    if (lines[j].from != slack_index) rhs[red(lines[j].from)] = b;
    if (lines[j].to != slack_index) rhs[red(lines[j].to)] -= b;
    // b_red is symmetric, so this column of B_f B_red^{-1} is one solve.
    Vec col = lu.solve(rhs);
    if (!col.allFinite() || (b_red * col - rhs).norm() > 1e-6 * (1.0 + rhs.norm()))
      throw NetworkError("network not connected or degenerate reactances");
    for (int b2 = 0; b2 < n_buses; ++b2)
      if (b2 != slack_index) sf(b2, j) = col[red(b2)];
  }
  return sf;
}

Network build_network(const CaseDocument& doc) {
  validate_case(doc);
  Network net;
  net.doc = doc;

  const int nb = net.n_buses();
  net.load = Vec::Zero(nb);
  for (int b = 0; b < nb; ++b) {
    net.bus_index[doc.buses[b].id] = b;
    net.load[b] = doc.buses[b].load_mw;
  }
  net.slack_index = doc.slack_bus.empty() ? 0 : net.bus_index.at(doc.slack_bus);

  for (const auto& g : doc.generators) net.gen_bus.push_back(net.bus_index.at(g.bus));
  for (const auto& s : doc.storage) net.storage_bus.push_back(net.bus_index.at(s.bus));

  std::vector<LineTopology> topo;
  for (const auto& l : doc.lines) {
    const int f = net.bus_index.at(l.from);
    const int t = net.bus_index.at(l.to);
    net.line_from.push_back(f);
    net.line_to.push_back(t);
    topo.push_back({f, t, l.reactance});
  }

  // Connectivity from the slack bus.
  std::vector<char> seen(nb, 0);
  std::queue<int> frontier;
  frontier.push(net.slack_index);
  seen[net.slack_index] = 1;
  std::vector<std::vector<int>> adj(nb);
  for (std::size_t l = 0; l < topo.size(); ++l) {
    adj[topo[l].from].push_back(topo[l].to);
    adj[topo[l].to].push_back(topo[l].from);
  }
  while (!frontier.empty()) {
    const int b = frontier.front();
    frontier.pop();
    for (int nb2 : adj[b])
      if (!seen[nb2]) {
        seen[nb2] = 1;
        frontier.push(nb2);
      }
  }
  std::string unreachable;
  for (int b = 0; b < nb; ++b)
    if (!seen[b]) unreachable += (unreachable.empty() ? "" : ", ") + doc.buses[b].id;
  if (!unreachable.empty())
    throw NetworkError("buses unreachable from slack: " + unreachable);

  net.sf = compute_ptdf(nb, topo, net.slack_index);
  return net;
}

void validate_hyperbox(const Hyperbox& box, int n_buses) {
  if (box.d_bar.size() != n_buses || box.delta_d.size() != n_buses)
    throw ValidationError("hyperbox dimension does not match bus count");
  if (!box.d_bar.allFinite() || !box.delta_d.allFinite())
    throw ValidationError("hyperbox has non-finite entries");
  if (box.delta_d.size() > 0 && box.delta_d.minCoeff() < 0.0)
    throw ValidationError("delta_d must be elementwise nonnegative");
}

}  // namespace gridflex
