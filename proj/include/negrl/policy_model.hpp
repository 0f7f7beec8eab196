#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "negrl/distribution.hpp"
#include "negrl/flat_policy.hpp"
#include "negrl/gat_policy.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/net_common.hpp"

namespace negrl {

/// Either policy's per-step input. Graph observations are size-invariant;
/// flat observations are bound to one domain shape.
using Observation = std::variant<ObservationGraph, FlatObservation>;

const std::vector<int>& observation_group_sizes(const Observation& obs);
bool observation_accept_legal(const Observation& obs);

enum class PolicyKind { kGnn, kFlat };
PolicyKind policy_kind_by_name(const std::string& name);
std::string policy_kind_name(PolicyKind kind);

/// Distribution-level view of one forward pass.
struct PolicyOutput {
  ActionDistribution dist;
  double value = 0.0;
};

/// Type-erased policy+value model: the graph attention net or the flat
/// baseline behind one interface, so the trainer and evaluator never branch
/// on the network family. Training math runs in single precision; parameters
/// cross the interface as doubles.
class PolicyModel {
 public:
  virtual ~PolicyModel() = default;

  virtual PolicyKind kind() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual const std::vector<ParamSection>& sections() const = 0;
  virtual void init_params(std::uint64_t seed) = 0;
  virtual std::vector<double> params_as_double() const = 0;
  virtual void set_params_from_double(const std::vector<double>& params) = 0;

  /// Builds this policy's observation for the current step. A pre-built
  /// topology may be passed to share structure across an episode; the flat
  /// policy ignores it.
  virtual Observation encode(const Domain& domain, const UtilityFunction& own_utility,
                             const HistoryStats& stats, int round, int deadline,
                             std::shared_ptr<const GraphTopology> topology = nullptr) const = 0;

  virtual PolicyLogits forward_logits(const Observation& obs) = 0;
  virtual void zero_grad() = 0;
  virtual void backward(const Observation& obs, const HeadGrads& head_grads) = 0;
  virtual void accumulate_grad(std::vector<double>& into, double scale) const = 0;

  /// forward_logits composed into the action distribution, with accept
  /// masked out when the observation has no standing offer.
  PolicyOutput forward(const Observation& obs);
};

/// Graph policy in float (training precision).
std::unique_ptr<PolicyModel> make_gnn_policy(const GatConfig& config);
/// Flat baseline in float, bound to the given domain shape.
std::unique_ptr<PolicyModel> make_flat_policy(const FlatConfig& config);

/// Optimizer/bookkeeping state stored alongside parameters.
struct CheckpointMeta {
  std::uint64_t train_seed = 0;
  std::int64_t step = 0;
  std::int64_t episodes = 0;
  bool has_adam = false;
  std::int64_t adam_t = 0;
  std::vector<double> adam_m, adam_v;
};

/// Versioned binary checkpoint: magic, JSON header (kind, architecture,
/// named section table, meta), then the flat parameter array and optional
/// Adam moments as little-endian doubles. `params_override` substitutes a
/// full-precision parameter vector (the trainer's double master copy) for
/// the model's own float-cast parameters.
void save_checkpoint(const std::string& path, const PolicyModel& model,
                     const CheckpointMeta& meta,
                     const std::vector<double>* params_override = nullptr);

struct LoadedCheckpoint {
  std::unique_ptr<PolicyModel> model;
  CheckpointMeta meta;
  std::vector<double> params;  ///< raw payload, before the model's float cast
};

/// Reconstructs the model from the header and validates the section table
/// and parameter count before accepting the payload.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace negrl
