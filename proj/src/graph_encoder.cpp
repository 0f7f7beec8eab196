#include "negrl/graph_encoder.hpp"

#include <sstream>

#include "negrl/problem_io.hpp"

namespace negrl {

HistoryStats::HistoryStats(const Domain& domain) : domain_(domain) {
  value_start_.resize(static_cast<std::size_t>(domain.num_objectives()));
  int offset = 0;
  for (int b = 0; b < domain.num_objectives(); ++b) {
    value_start_[static_cast<std::size_t>(b)] = offset;
    offset += domain.value_count(b);
  }
  for (int side = 0; side < 2; ++side) {
    last_[side].assign(static_cast<std::size_t>(offset), 0);
    counts_[side].assign(static_cast<std::size_t>(offset), 0);
  }
}

void HistoryStats::record_offer(Side side, const Outcome& offer) {
  domain_.check_outcome(offer);
  const int s = static_cast<int>(side);
  std::fill(last_[s].begin(), last_[s].end(), std::uint8_t{0});
  for (int b = 0; b < domain_.num_objectives(); ++b) {
    const int i = flat_index(b, offer[static_cast<std::size_t>(b)]);
    last_[s][static_cast<std::size_t>(i)] = 1;
    counts_[s][static_cast<std::size_t>(i)] += 1;
  }
  totals_[s] += 1;
}

bool HistoryStats::last_offer_flag(Side side, int objective, int value) const {
  return last_[static_cast<int>(side)][static_cast<std::size_t>(flat_index(objective, value))] != 0;
}

double HistoryStats::offer_fraction(Side side, int objective, int value) const {
  const int s = static_cast<int>(side);
  if (totals_[s] == 0) return 0.0;
  return static_cast<double>(counts_[s][static_cast<std::size_t>(flat_index(objective, value))]) /
         static_cast<double>(totals_[s]);
}

std::shared_ptr<const GraphTopology> GraphTopology::build(const Domain& domain) {
  auto topo = std::make_shared<GraphTopology>();
  topo->value_set_sizes = domain.value_set_sizes();
  const int m = domain.num_objectives();
  topo->value_start.resize(static_cast<std::size_t>(m));
  int next = 1 + m;
  for (int b = 0; b < m; ++b) {
    topo->value_start[static_cast<std::size_t>(b)] = next;
    next += domain.value_count(b);
  }
  topo->num_nodes = next;
  topo->total_values = next - 1 - m;

  topo->edges.reserve(static_cast<std::size_t>(m + topo->total_values));
  for (int b = 0; b < m; ++b) topo->edges.emplace_back(topo->head_node(), topo->objective_node(b));
  for (int b = 0; b < m; ++b) {
    for (int v = 0; v < domain.value_count(b); ++v) {
      topo->edges.emplace_back(topo->objective_node(b), topo->value_node(b, v));
    }
  }

  // CSR adjacency from the undirected edge list.
  std::vector<int> degree(static_cast<std::size_t>(topo->num_nodes), 0);
  for (const auto& [u, v] : topo->edges) {
    degree[static_cast<std::size_t>(u)]++;
    degree[static_cast<std::size_t>(v)]++;
  }
  topo->neighbor_offsets.resize(static_cast<std::size_t>(topo->num_nodes) + 1, 0);
  for (int n = 0; n < topo->num_nodes; ++n) {
    topo->neighbor_offsets[static_cast<std::size_t>(n) + 1] =
        topo->neighbor_offsets[static_cast<std::size_t>(n)] + degree[static_cast<std::size_t>(n)];
  }
  topo->neighbors.resize(static_cast<std::size_t>(topo->neighbor_offsets.back()));
  std::vector<int> cursor(topo->neighbor_offsets.begin(), topo->neighbor_offsets.end() - 1);
  for (const auto& [u, v] : topo->edges) {
    topo->neighbors[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
    topo->neighbors[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
  }
  return topo;
}

ObservationGraph build_graph(const std::shared_ptr<const GraphTopology>& topology,
                             const UtilityFunction& own_utility,
                             const HistoryStats& stats, int t, int deadline) {
  if (t > deadline || t < 0 || deadline < 1) {
    throw InvalidInputError("build_graph: need 0 <= t <= deadline");
  }
  const GraphTopology& topo = *topology;
  const int m = topo.num_objectives();

  ObservationGraph graph;
  graph.topology = topology;
  graph.features.setZero(topo.num_nodes, kNodeFeatureWidth);
  graph.has_standing_offer = stats.offer_count(Side::kOpponent) > 0;

  auto& x = graph.features;
  x(topo.head_node(), 0) = 1.0;
  x(topo.head_node(), 3) = static_cast<double>(m);
  x(topo.head_node(), 4) = static_cast<double>(t) / static_cast<double>(deadline);

  for (int b = 0; b < m; ++b) {
    const int node = topo.objective_node(b);
    x(node, 1) = 1.0;
    x(node, 3) = static_cast<double>(topo.value_set_sizes[static_cast<std::size_t>(b)]);
    x(node, 4) = own_utility.objective_weights[static_cast<std::size_t>(b)];
    for (int v = 0; v < topo.value_set_sizes[static_cast<std::size_t>(b)]; ++v) {
      const int vn = topo.value_node(b, v);
      x(vn, 2) = 1.0;
      x(vn, 3) = own_utility.value_weights[static_cast<std::size_t>(b)][static_cast<std::size_t>(v)];
      x(vn, 4) = stats.last_offer_flag(Side::kOpponent, b, v) ? 1.0 : 0.0;
      x(vn, 5) = stats.last_offer_flag(Side::kSelf, b, v) ? 1.0 : 0.0;
      x(vn, 6) = stats.offer_fraction(Side::kOpponent, b, v);
      x(vn, 7) = stats.offer_fraction(Side::kSelf, b, v);
    }
  }
  return graph;
}

ObservationGraph build_graph(const Domain& domain, const UtilityFunction& own_utility,
                             const HistoryStats& stats, int t, int deadline) {
  return build_graph(GraphTopology::build(domain), own_utility, stats, t, deadline);
}

std::string graph_to_string(const ObservationGraph& graph) {
  const GraphTopology& topo = *graph.topology;
  std::ostringstream out;
  out << "{\n  \"num_nodes\": " << topo.num_nodes
      << ",\n  \"has_standing_offer\": " << (graph.has_standing_offer ? "true" : "false")
      << ",\n  \"nodes\": [\n";
  for (int n = 0; n < topo.num_nodes; ++n) {
    std::string role = "head";
    if (graph.features(n, 1) == 1.0) role = "objective";
    if (graph.features(n, 2) == 1.0) role = "value";
    out << "    {\"id\": " << n << ", \"role\": \"" << role << "\", \"features\": [";
    for (int c = 0; c < kNodeFeatureWidth; ++c) {
      if (c > 0) out << ", ";
      out << format_double(graph.features(n, c));
    }
    out << "]}";
    if (n + 1 < topo.num_nodes) out << ",";
    out << "\n";
  }
  out << "  ],\n  \"edges\": [";
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    if (e > 0) out << ", ";
    out << "[" << topo.edges[e].first << ", " << topo.edges[e].second << "]";
  }
  out << "]\n}\n";
  return out.str();
}

}  // namespace negrl
