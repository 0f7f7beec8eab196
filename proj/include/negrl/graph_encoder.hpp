#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "negrl/domain.hpp"

namespace negrl {

enum class Side { kSelf = 0, kOpponent = 1 };

/// Running per-(objective, value) offer statistics for one agent's view of a
/// session: last-offer flags and offer fractions, kept separately per side.
class HistoryStats {
 public:
  HistoryStats() = default;
  explicit HistoryStats(const Domain& domain);

  /// Incorporates one offer made by `side`. Flags of that side move to the
  /// offered values; counts and totals advance.
  void record_offer(Side side, const Outcome& offer);

  bool last_offer_flag(Side side, int objective, int value) const;
  double offer_fraction(Side side, int objective, int value) const;
  int offer_count(Side side) const { return totals_[static_cast<int>(side)]; }

  const Domain& domain() const { return domain_; }

 private:
  int flat_index(int objective, int value) const {
    return value_start_[static_cast<std::size_t>(objective)] + value;
  }

  Domain domain_;
  std::vector<int> value_start_;
  std::vector<std::uint8_t> last_[2];
  std::vector<int> counts_[2];
  int totals_[2] = {0, 0};
};

/// Width of every node-feature row: 3 one-hot node-type columns followed by
/// 5 role-specific columns (value nodes use all 5, objective and head nodes
/// use 2 and are zero-padded).
inline constexpr int kNodeFeatureWidth = 8;

/// Domain-dependent graph structure: one head node, one node per objective,
/// one node per value. Values connect to their objective; objectives connect
/// to the head. Shared across all steps of an episode.
struct GraphTopology {
  std::vector<int> value_set_sizes;
  int num_nodes = 0;
  int total_values = 0;
  std::vector<std::pair<int, int>> edges;        ///< undirected pairs
  std::vector<int> neighbor_offsets;             ///< CSR over nodes
  std::vector<int> neighbors;
  std::vector<int> value_start;                  ///< first value-node id per objective

  static std::shared_ptr<const GraphTopology> build(const Domain& domain);

  int num_objectives() const { return static_cast<int>(value_set_sizes.size()); }
  int head_node() const { return 0; }
  int objective_node(int b) const { return 1 + b; }
  int value_node(int b, int v) const { return value_start[static_cast<std::size_t>(b)] + v; }
  int first_value_node() const { return 1 + num_objectives(); }
  int degree(int node) const {
    return neighbor_offsets[static_cast<std::size_t>(node) + 1] -
           neighbor_offsets[static_cast<std::size_t>(node)];
  }
};

/// One observation: the shared topology plus per-node features for the
/// current step. Rows follow the node ids of the topology.
struct ObservationGraph {
  std::shared_ptr<const GraphTopology> topology;
  Eigen::Matrix<double, Eigen::Dynamic, kNodeFeatureWidth, Eigen::RowMajor> features;
  bool has_standing_offer = false;  ///< an accept action would be legal
};

/// Encodes the problem structure, own preferences, offer statistics and
/// deadline progress into the observation graph.
///
/// Feature rows (after the 3 node-type columns):
///   head       [num_objectives, t/H]
///   objective  [value count, objective weight]
///   value      [value weight, opp last flag, own last flag, opp fraction, own fraction]
ObservationGraph build_graph(const std::shared_ptr<const GraphTopology>& topology,
                             const UtilityFunction& own_utility,
                             const HistoryStats& stats, int t, int deadline);

/// Convenience overload that builds the topology on the fly.
ObservationGraph build_graph(const Domain& domain, const UtilityFunction& own_utility,
                             const HistoryStats& stats, int t, int deadline);

/// Structured text dump (nodes with roles and features, edge list).
std::string graph_to_string(const ObservationGraph& graph);

}  // namespace negrl
