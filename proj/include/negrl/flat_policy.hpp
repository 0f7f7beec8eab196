#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "negrl/domain.hpp"
#include "negrl/errors.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/matrix.hpp"
#include "negrl/net_common.hpp"
#include "negrl/rng.hpp"

namespace negrl {

/// Fixed-width observation for the single-problem baseline: for every value
/// (objective-major) the same four history features the graph encoder uses
/// (opponent/own last-offer flags, opponent/own offer fractions), then the
/// deadline progress scalar. Utility weights are omitted — they are constant
/// for a fixed problem.
struct FlatObservation {
  Eigen::VectorXd features;
  std::vector<int> group_sizes;
  bool has_standing_offer = false;
};

inline int flat_feature_width(const std::vector<int>& group_sizes) {
  return 4 * std::accumulate(group_sizes.begin(), group_sizes.end(), 0) + 1;
}

FlatObservation encode_flat_observation(const Domain& domain, const HistoryStats& stats,
                                        int round, int deadline);

struct FlatConfig {
  int hidden_layers = 2;
  int hidden_width = 256;
  std::vector<int> group_sizes;  ///< value counts of the one domain this net accepts

  int total_values() const {
    return std::accumulate(group_sizes.begin(), group_sizes.end(), 0);
  }
  int input_width() const { return flat_feature_width(group_sizes); }

  void validate() const {
    if (hidden_layers < 1) throw ConfigError("flat net needs at least one hidden layer");
    if (hidden_width < 1) throw ConfigError("flat net hidden width must be positive");
    if (group_sizes.empty()) throw ConfigError("flat net needs the domain's value-set sizes");
    for (int size : group_sizes) {
      if (size < 1) throw ConfigError("flat net value-set sizes must be positive");
    }
  }
};

/// Plain MLP sharing the policy-head contract with the graph net: rectifier
/// hidden layers, then accept logits, per-value offer logits, and a state
/// value. Bound to one domain shape for its whole life.
template <typename Scalar>
class FlatPolicyNet {
 public:
  explicit FlatPolicyNet(FlatConfig config) : config_(std::move(config)) {
    config_.validate();
    build_sections();
    flat_.assign(total_params_, Scalar(0));
    grad_.assign(total_params_, Scalar(0));
    ws_.a.resize(static_cast<std::size_t>(config_.hidden_layers) + 1);
    ws_.z.resize(static_cast<std::size_t>(config_.hidden_layers));
  }

  const FlatConfig& config() const { return config_; }
  std::size_t param_count() const { return total_params_; }
  const std::vector<ParamSection>& sections() const { return sections_; }

  const ParamSection& find_section(const std::string& name) const {
    for (const auto& s : sections_) {
      if (s.name == name) return s;
    }
    throw InvalidInputError("unknown parameter section: " + name);
  }

  std::vector<double> params_as_double() const {
    return std::vector<double>(flat_.begin(), flat_.end());
  }

  void set_params_from_double(const std::vector<double>& params) {
    if (params.size() != total_params_) {
      throw InvalidInputError("parameter vector size " + std::to_string(params.size()) +
                              " does not match network size " + std::to_string(total_params_));
    }
    for (std::size_t i = 0; i < total_params_; ++i) flat_[i] = static_cast<Scalar>(params[i]);
  }

  void init_params(std::uint64_t seed) {
    Rng rng(seed);
    std::fill(flat_.begin(), flat_.end(), Scalar(0));
    const double trunk_gain = std::sqrt(2.0);
    for (int l = 0; l < config_.hidden_layers; ++l) {
      set_section(hidden_w(l), orthogonal_matrix(config_.hidden_width, layer_input_width(l),
                                                 trunk_gain, rng));
    }
    set_section(head_section(kValueW), orthogonal_matrix(1, config_.hidden_width, 1.0, rng));
    set_section(head_section(kAcceptW), orthogonal_matrix(2, config_.hidden_width, 0.01, rng));
    set_section(head_section(kOfferW),
                orthogonal_matrix(config_.total_values(), config_.hidden_width, 0.01, rng));
  }

  void zero_grad() { std::fill(grad_.begin(), grad_.end(), Scalar(0)); }

  void accumulate_grad(std::vector<double>& into, double scale) const {
    if (into.size() != total_params_) {
      throw InvalidInputError("gradient accumulator size mismatch");
    }
    for (std::size_t i = 0; i < total_params_; ++i) {
      into[i] += scale * static_cast<double>(grad_[i]);
    }
  }

  PolicyLogits forward(const FlatObservation& obs) {
    if (obs.group_sizes != config_.group_sizes) {
      throw InvalidInputError("flat policy evaluated on a different domain shape");
    }
    if (obs.features.size() != config_.input_width()) {
      throw InvalidInputError("flat observation width " + std::to_string(obs.features.size()) +
                              " does not match expected " + std::to_string(config_.input_width()));
    }
    ws_.a[0] = obs.features.template cast<Scalar>();
    for (int l = 0; l < config_.hidden_layers; ++l) {
      Vec<Scalar>& z = ws_.z[static_cast<std::size_t>(l)];
      z.noalias() = view(hidden_w(l)) * ws_.a[static_cast<std::size_t>(l)];
      z += view(hidden_b(l)).col(0);
      if (!z.allFinite()) {
        throw NumericError("non-finite activations in flat layer " + std::to_string(l));
      }
      ws_.a[static_cast<std::size_t>(l) + 1] = z.cwiseMax(Scalar(0));
    }
    const Vec<Scalar>& top = ws_.a[static_cast<std::size_t>(config_.hidden_layers)];
    PolicyLogits result;
    result.value = static_cast<double>((view(head_section(kValueW)) * top)(0, 0) +
                                       view(head_section(kValueB))(0, 0));
    Eigen::Matrix<Scalar, 2, 1> accept =
        view(head_section(kAcceptW)) * top + view(head_section(kAcceptB)).col(0);
    result.accept_logits = accept.template cast<double>();
    Vec<Scalar> offers = view(head_section(kOfferW)) * top + view(head_section(kOfferB)).col(0);
    result.offer_logits = offers.template cast<double>();
    last_obs_ = &obs;
    return result;
  }

  void backward(const FlatObservation& obs, const HeadGrads& head_grads) {
    if (&obs != last_obs_) {
      throw InvalidInputError("backward requires a preceding forward on the same observation");
    }
    if (head_grads.offer.size() != config_.total_values()) {
      throw InvalidInputError("offer head gradient size does not match value count");
    }
    const Vec<Scalar>& top = ws_.a[static_cast<std::size_t>(config_.hidden_layers)];
    Vec<Scalar> da = Vec<Scalar>::Zero(config_.hidden_width);

    const Scalar dv = static_cast<Scalar>(head_grads.value);
    grad_view(head_section(kValueW)) += dv * top.transpose();
    grad_view(head_section(kValueB))(0, 0) += dv;
    da.noalias() += dv * view(head_section(kValueW)).transpose().col(0);

    const Eigen::Matrix<Scalar, 2, 1> dacc = head_grads.accept.template cast<Scalar>();
    grad_view(head_section(kAcceptW)) += dacc * top.transpose();
    grad_view(head_section(kAcceptB)).col(0) += dacc;
    da.noalias() += view(head_section(kAcceptW)).transpose() * dacc;

    const Vec<Scalar> doffer = head_grads.offer.template cast<Scalar>();
    grad_view(head_section(kOfferW)) += doffer * top.transpose();
    grad_view(head_section(kOfferB)).col(0) += doffer;
    da.noalias() += view(head_section(kOfferW)).transpose() * doffer;

    for (int l = config_.hidden_layers - 1; l >= 0; --l) {
      const Vec<Scalar>& z = ws_.z[static_cast<std::size_t>(l)];
      const Vec<Scalar> dz =
          (da.array() * (z.array() > Scalar(0)).template cast<Scalar>()).matrix();
      grad_view(hidden_b(l)).col(0) += dz;
      grad_view(hidden_w(l)) += dz * ws_.a[static_cast<std::size_t>(l)].transpose();
      if (l > 0) {
        da.resize(view(hidden_w(l)).cols());
        da.noalias() = view(hidden_w(l)).transpose() * dz;
      }
    }
  }

 private:
  enum HeadPart { kValueW = 0, kValueB, kAcceptW, kAcceptB, kOfferW, kOfferB };

  int layer_input_width(int l) const {
    return l == 0 ? config_.input_width() : config_.hidden_width;
  }

  std::size_t hidden_w(int l) const { return static_cast<std::size_t>(l) * 2; }
  std::size_t hidden_b(int l) const { return static_cast<std::size_t>(l) * 2 + 1; }
  std::size_t head_section(int part) const {
    return static_cast<std::size_t>(config_.hidden_layers) * 2 + static_cast<std::size_t>(part);
  }

  void build_sections() {
    sections_.clear();
    total_params_ = 0;
    auto add = [this](std::string name, int rows, int cols) {
      sections_.push_back({std::move(name), total_params_, rows, cols});
      total_params_ += sections_.back().size();
    };
    for (int l = 0; l < config_.hidden_layers; ++l) {
      add("layer" + std::to_string(l) + ".w", config_.hidden_width, layer_input_width(l));
      add("layer" + std::to_string(l) + ".b", config_.hidden_width, 1);
    }
    add("value_w", 1, config_.hidden_width);
    add("value_b", 1, 1);
    add("accept_w", 2, config_.hidden_width);
    add("accept_b", 2, 1);
    add("offer_w", config_.total_values(), config_.hidden_width);
    add("offer_b", config_.total_values(), 1);
  }

  Eigen::Map<const RowMat<Scalar>> view(std::size_t section) const {
    const auto& s = sections_[section];
    return {flat_.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<RowMat<Scalar>> view(std::size_t section) {
    const auto& s = sections_[section];
    return {flat_.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<RowMat<Scalar>> grad_view(std::size_t section) {
    const auto& s = sections_[section];
    return {grad_.data() + s.offset, s.rows, s.cols};
  }

  void set_section(std::size_t section, const RowMatX& values) {
    const auto& s = sections_[section];
    if (values.rows() != s.rows || values.cols() != s.cols) {
      throw InvalidInputError("section shape mismatch for " + s.name);
    }
    view(section) = values.template cast<Scalar>();
  }

  struct Workspace {
    std::vector<Vec<Scalar>> a;  ///< activations, a[0] = input
    std::vector<Vec<Scalar>> z;  ///< pre-activations
  };

  FlatConfig config_;
  std::vector<ParamSection> sections_;
  std::size_t total_params_ = 0;
  std::vector<Scalar> flat_, grad_;
  Workspace ws_;
  const FlatObservation* last_obs_ = nullptr;
};

}  // namespace negrl
