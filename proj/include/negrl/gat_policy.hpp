#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "negrl/errors.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/matrix.hpp"
#include "negrl/net_common.hpp"
#include "negrl/rng.hpp"

namespace negrl {

inline constexpr double kAttentionLeakySlope = 0.2;

struct GatConfig {
  int layers = 4;
  int hidden_width = 256;
  int heads = 4;

  void validate() const {
    if (layers < 1) throw ConfigError("gat layers must be >= 1");
    if (heads < 1) throw ConfigError("gat heads must be >= 1");
    if (hidden_width < heads) throw ConfigError("gat hidden width must be >= heads");
    if (hidden_width % heads != 0) throw ConfigError("gat hidden width must be divisible by heads");
  }
};

/// Graph attention policy/value network over negotiation observation graphs.
///
/// Each layer runs `heads` attention heads. A head projects node features
/// with psi, scores directed pairs with att_src/att_dst through a leaky
/// ReLU, softmaxes the scores over each node's (strict) neighborhood,
/// aggregates projected neighbor features, and maps the concatenation of the
/// node's own features with the aggregate through phi. Head outputs are
/// concatenated back to the hidden width; a plain ReLU sits between layers
/// (not after the last). Three linear heads read the final embeddings:
/// state value and accept logits from the head node, a shared per-node offer
/// logit from every value node.
///
/// All parameters live in one flat vector; gradients accumulate into a
/// parallel buffer via hand-derived backward passes. Scalar is float for
/// training speed and double for finite-difference verification.
template <typename Scalar>
class GatPolicyNet {
 public:
  explicit GatPolicyNet(GatConfig config) : config_(config) {
    config_.validate();
    build_sections();
    flat_.assign(total_params_, Scalar(0));
    grad_.assign(total_params_, Scalar(0));
    const int layers = config_.layers;
    const int heads = config_.heads;
    ws_.x.resize(static_cast<std::size_t>(layers));
    ws_.out.resize(static_cast<std::size_t>(layers));
    ws_.p.assign(static_cast<std::size_t>(layers), std::vector<RowMat<Scalar>>(heads));
    ws_.agg.assign(static_cast<std::size_t>(layers), std::vector<RowMat<Scalar>>(heads));
    ws_.s_src.assign(static_cast<std::size_t>(layers), std::vector<Vec<Scalar>>(heads));
    ws_.s_dst.assign(static_cast<std::size_t>(layers), std::vector<Vec<Scalar>>(heads));
    ws_.alpha.assign(static_cast<std::size_t>(layers),
                     std::vector<std::vector<Scalar>>(static_cast<std::size_t>(heads)));
  }

  const GatConfig& config() const { return config_; }
  int width() const { return config_.hidden_width; }
  int head_width() const { return config_.hidden_width / config_.heads; }
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

  /// Orthogonal init: gain sqrt(2) through the trunk (psi, phi, attention
  /// vectors), 1.0 on the value head, 0.01 on the accept and offer heads,
  /// zero biases.
  void init_params(std::uint64_t seed) {
    Rng rng(seed);
    std::fill(flat_.begin(), flat_.end(), Scalar(0));
    const double trunk_gain = std::sqrt(2.0);
    for (int l = 0; l < config_.layers; ++l) {
      const int in_w = layer_input_width(l);
      const int hw = head_width();
      for (int k = 0; k < config_.heads; ++k) {
        set_section(layer_section(l, k, kPsiW), orthogonal_matrix(hw, in_w, trunk_gain, rng));
        set_section(layer_section(l, k, kAttSrc), orthogonal_matrix(hw, 1, trunk_gain, rng));
        set_section(layer_section(l, k, kAttDst), orthogonal_matrix(hw, 1, trunk_gain, rng));
        set_section(layer_section(l, k, kPhiW), orthogonal_matrix(hw, in_w + hw, trunk_gain, rng));
      }
    }
    set_section(head_section(kValueW), orthogonal_matrix(1, width(), 1.0, rng));
    set_section(head_section(kAcceptW), orthogonal_matrix(2, width(), 0.01, rng));
    set_section(head_section(kOfferW), orthogonal_matrix(1, width(), 0.01, rng));
  }

  void zero_grad() { std::fill(grad_.begin(), grad_.end(), Scalar(0)); }

  /// into[i] += scale * grad[i]; `into` must already have param_count entries.
  void accumulate_grad(std::vector<double>& into, double scale) const {
    if (into.size() != total_params_) {
      throw InvalidInputError("gradient accumulator size mismatch");
    }
    for (std::size_t i = 0; i < total_params_; ++i) {
      into[i] += scale * static_cast<double>(grad_[i]);
    }
  }

  PolicyLogits forward(const ObservationGraph& g) {
    const GraphTopology& topo = *g.topology;
    const int n = topo.num_nodes;
    if (g.features.rows() != n || g.features.cols() != kNodeFeatureWidth) {
      throw InvalidInputError("observation feature matrix shape does not match topology");
    }
    const int layers = config_.layers;
    const int heads = config_.heads;
    const int hw = head_width();
    const int w = width();

    ws_.x[0] = g.features.template cast<Scalar>();
    for (int l = 0; l < layers; ++l) {
      const RowMat<Scalar>& x = ws_.x[static_cast<std::size_t>(l)];
      const int in_w = layer_input_width(l);
      RowMat<Scalar>& out = ws_.out[static_cast<std::size_t>(l)];
      out.resize(n, w);
      for (int k = 0; k < heads; ++k) {
        auto psi_w = view(layer_section(l, k, kPsiW));
        auto psi_b = view(layer_section(l, k, kPsiB));
        RowMat<Scalar>& p = ws_.p[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        p.resize(n, hw);
        p.noalias() = x * psi_w.transpose();
        p.rowwise() += psi_b.col(0).transpose();

        Vec<Scalar>& s_src = ws_.s_src[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        Vec<Scalar>& s_dst = ws_.s_dst[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        s_src.noalias() = p * view(layer_section(l, k, kAttSrc)).col(0);
        s_dst.noalias() = p * view(layer_section(l, k, kAttDst)).col(0);

        auto& alpha = ws_.alpha[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        alpha.resize(topo.neighbors.size());
        RowMat<Scalar>& agg = ws_.agg[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        agg.resize(n, hw);
        for (int u = 0; u < n; ++u) {
          const int begin = topo.neighbor_offsets[static_cast<std::size_t>(u)];
          const int end = topo.neighbor_offsets[static_cast<std::size_t>(u) + 1];
          if (begin == end) {
            agg.row(u).setZero();
            continue;
          }
          Scalar max_score = std::numeric_limits<Scalar>::lowest();
          for (int j = begin; j < end; ++j) {
            const Scalar z = s_src[u] + s_dst[topo.neighbors[static_cast<std::size_t>(j)]];
            const Scalar score = z > Scalar(0) ? z : Scalar(kAttentionLeakySlope) * z;
            alpha[static_cast<std::size_t>(j)] = score;
            max_score = std::max(max_score, score);
          }
          Scalar norm(0);
          for (int j = begin; j < end; ++j) {
            auto& a = alpha[static_cast<std::size_t>(j)];
            a = std::exp(a - max_score);
            norm += a;
          }
          agg.row(u).setZero();
          for (int j = begin; j < end; ++j) {
            auto& a = alpha[static_cast<std::size_t>(j)];
            a /= norm;
            agg.row(u) += a * p.row(topo.neighbors[static_cast<std::size_t>(j)]);
          }
        }

        auto phi_w = view(layer_section(l, k, kPhiW));
        auto phi_b = view(layer_section(l, k, kPhiB));
        auto out_k = out.middleCols(k * hw, hw);
        out_k.noalias() = x * phi_w.leftCols(in_w).transpose();
        out_k.noalias() += agg * phi_w.rightCols(hw).transpose();
        out_k.rowwise() += phi_b.col(0).transpose();
      }
      if (!out.allFinite()) {
        throw NumericError("non-finite activations in graph attention layer " + std::to_string(l));
      }
      if (l + 1 < layers) {
        ws_.x[static_cast<std::size_t>(l) + 1] = out.cwiseMax(Scalar(0));
      }
    }

    const RowMat<Scalar>& h = ws_.out[static_cast<std::size_t>(layers) - 1];
    const int total_values = topo.total_values;
    PolicyLogits result;
    result.value = static_cast<double>(
        (view(head_section(kValueW)) * h.row(0).transpose())(0, 0) +
        view(head_section(kValueB))(0, 0));
    Eigen::Matrix<Scalar, 2, 1> accept =
        view(head_section(kAcceptW)) * h.row(0).transpose() + view(head_section(kAcceptB)).col(0);
    result.accept_logits = accept.template cast<double>();
    Vec<Scalar> offers =
        (h.bottomRows(total_values) * view(head_section(kOfferW)).transpose()).col(0);
    offers.array() += view(head_section(kOfferB))(0, 0);
    result.offer_logits = offers.template cast<double>();

    last_graph_ = &g;
    return result;
  }

  /// Accumulates parameter gradients for the observation passed to the most
  /// recent forward() call. head_grads holds the loss gradients with respect
  /// to the raw head outputs.
  void backward(const ObservationGraph& g, const HeadGrads& head_grads) {
    if (&g != last_graph_) {
      throw InvalidInputError("backward requires a preceding forward on the same observation");
    }
    const GraphTopology& topo = *g.topology;
    const int n = topo.num_nodes;
    const int layers = config_.layers;
    const int heads = config_.heads;
    const int hw = head_width();
    const int w = width();
    const int total_values = topo.total_values;
    if (head_grads.offer.size() != total_values) {
      throw InvalidInputError("offer head gradient size does not match value node count");
    }

    const RowMat<Scalar>& h = ws_.out[static_cast<std::size_t>(layers) - 1];
    RowMat<Scalar>& dh = ws_.dh;
    dh.resize(n, w);
    dh.setZero();

    const Scalar dv = static_cast<Scalar>(head_grads.value);
    grad_view(head_section(kValueW)) += dv * h.row(0);
    grad_view(head_section(kValueB))(0, 0) += dv;
    dh.row(0) += dv * view(head_section(kValueW));

    const Eigen::Matrix<Scalar, 2, 1> da = head_grads.accept.template cast<Scalar>();
    grad_view(head_section(kAcceptW)) += da * h.row(0);
    grad_view(head_section(kAcceptB)).col(0) += da;
    dh.row(0) += (view(head_section(kAcceptW)).transpose() * da).transpose();

    const Vec<Scalar> doffer = head_grads.offer.template cast<Scalar>();
    grad_view(head_section(kOfferW)).row(0) +=
        (h.bottomRows(total_values).transpose() * doffer).transpose();
    grad_view(head_section(kOfferB))(0, 0) += doffer.sum();
    dh.bottomRows(total_values).noalias() += doffer * view(head_section(kOfferW));

    for (int l = layers - 1; l >= 0; --l) {
      const RowMat<Scalar>& x = ws_.x[static_cast<std::size_t>(l)];
      const int in_w = layer_input_width(l);
      RowMat<Scalar>& dout = ws_.dout;
      dout.resize(n, w);
      if (l == layers - 1) {
        dout = dh;
      } else {
        dout.array() = ws_.dx_next.array() *
                       (ws_.out[static_cast<std::size_t>(l)].array() > Scalar(0)).template cast<Scalar>();
      }
      RowMat<Scalar>& dx = ws_.dx;
      dx.resize(n, in_w);
      dx.setZero();
      for (int k = 0; k < heads; ++k) {
        const RowMat<Scalar>& p = ws_.p[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        const RowMat<Scalar>& agg = ws_.agg[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        const auto& alpha = ws_.alpha[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        const Vec<Scalar>& s_src = ws_.s_src[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        const Vec<Scalar>& s_dst = ws_.s_dst[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        auto dout_k = dout.middleCols(k * hw, hw);
        auto phi_w = view(layer_section(l, k, kPhiW));

        grad_view(layer_section(l, k, kPhiB)).col(0) += dout_k.colwise().sum().transpose();
        grad_view(layer_section(l, k, kPhiW)).leftCols(in_w) += dout_k.transpose() * x;
        grad_view(layer_section(l, k, kPhiW)).rightCols(hw) += dout_k.transpose() * agg;
        dx.noalias() += dout_k * phi_w.leftCols(in_w);

        RowMat<Scalar>& dagg = ws_.dagg;
        dagg.resize(n, hw);
        dagg.noalias() = dout_k * phi_w.rightCols(hw);

        RowMat<Scalar>& dp = ws_.dp;
        dp.resize(n, hw);
        dp.setZero();
        Vec<Scalar>& ds_src = ws_.ds_src;
        Vec<Scalar>& ds_dst = ws_.ds_dst;
        ds_src.setZero(n);
        ds_dst.setZero(n);
        auto& dalpha = ws_.dalpha;
        dalpha.resize(alpha.size());
        for (int u = 0; u < n; ++u) {
          const int begin = topo.neighbor_offsets[static_cast<std::size_t>(u)];
          const int end = topo.neighbor_offsets[static_cast<std::size_t>(u) + 1];
          if (begin == end) continue;
          Scalar dot(0);
          for (int j = begin; j < end; ++j) {
            const int v = topo.neighbors[static_cast<std::size_t>(j)];
            dalpha[static_cast<std::size_t>(j)] = dagg.row(u).dot(p.row(v));
            dp.row(v) += alpha[static_cast<std::size_t>(j)] * dagg.row(u);
            dot += alpha[static_cast<std::size_t>(j)] * dalpha[static_cast<std::size_t>(j)];
          }
          for (int j = begin; j < end; ++j) {
            const int v = topo.neighbors[static_cast<std::size_t>(j)];
            const Scalar de = alpha[static_cast<std::size_t>(j)] * (dalpha[static_cast<std::size_t>(j)] - dot);
            const Scalar z = s_src[u] + s_dst[v];
            const Scalar dz = de * (z > Scalar(0) ? Scalar(1) : Scalar(kAttentionLeakySlope));
            ds_src[u] += dz;
            ds_dst[v] += dz;
          }
        }
        grad_view(layer_section(l, k, kAttSrc)).col(0) += p.transpose() * ds_src;
        grad_view(layer_section(l, k, kAttDst)).col(0) += p.transpose() * ds_dst;
        dp.noalias() += ds_src * view(layer_section(l, k, kAttSrc)).col(0).transpose();
        dp.noalias() += ds_dst * view(layer_section(l, k, kAttDst)).col(0).transpose();

        auto psi_w = view(layer_section(l, k, kPsiW));
        grad_view(layer_section(l, k, kPsiB)).col(0) += dp.colwise().sum().transpose();
        grad_view(layer_section(l, k, kPsiW)) += dp.transpose() * x;
        dx.noalias() += dp * psi_w;
      }
      std::swap(ws_.dx, ws_.dx_next);
    }
  }

  /// Post-softmax attention weights from the most recent forward, one entry
  /// per CSR adjacency slot.
  const std::vector<Scalar>& attention_weights(int layer, int head) const {
    return ws_.alpha.at(static_cast<std::size_t>(layer)).at(static_cast<std::size_t>(head));
  }

 private:
  enum LayerPart { kPsiW = 0, kPsiB, kAttSrc, kAttDst, kPhiW, kPhiB };
  enum HeadPart { kValueW = 0, kValueB, kAcceptW, kAcceptB, kOfferW, kOfferB };

  int layer_input_width(int l) const { return l == 0 ? kNodeFeatureWidth : config_.hidden_width; }

  std::size_t layer_section(int l, int k, int part) const {
    return (static_cast<std::size_t>(l) * static_cast<std::size_t>(config_.heads) +
            static_cast<std::size_t>(k)) * 6 + static_cast<std::size_t>(part);
  }

  std::size_t head_section(int part) const {
    return static_cast<std::size_t>(config_.layers) * static_cast<std::size_t>(config_.heads) * 6 +
           static_cast<std::size_t>(part);
  }

  void build_sections() {
    sections_.clear();
    total_params_ = 0;
    auto add = [this](std::string name, int rows, int cols) {
      sections_.push_back({std::move(name), total_params_, rows, cols});
      total_params_ += sections_.back().size();
    };
    const int hw = head_width();
    for (int l = 0; l < config_.layers; ++l) {
      const int in_w = layer_input_width(l);
      for (int k = 0; k < config_.heads; ++k) {
        const std::string prefix = "layer" + std::to_string(l) + ".head" + std::to_string(k) + ".";
        add(prefix + "psi_w", hw, in_w);
        add(prefix + "psi_b", hw, 1);
        add(prefix + "att_src", hw, 1);
        add(prefix + "att_dst", hw, 1);
        add(prefix + "phi_w", hw, in_w + hw);
        add(prefix + "phi_b", hw, 1);
      }
    }
    add("value_w", 1, config_.hidden_width);
    add("value_b", 1, 1);
    add("accept_w", 2, config_.hidden_width);
    add("accept_b", 2, 1);
    add("offer_w", 1, config_.hidden_width);
    add("offer_b", 1, 1);
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
    std::vector<RowMat<Scalar>> x;                     // layer inputs
    std::vector<RowMat<Scalar>> out;                   // pre-activation layer outputs
    std::vector<std::vector<RowMat<Scalar>>> p, agg;   // [layer][head]
    std::vector<std::vector<Vec<Scalar>>> s_src, s_dst;
    std::vector<std::vector<std::vector<Scalar>>> alpha;  // per CSR slot
    RowMat<Scalar> dh, dout, dx, dx_next, dp, dagg;
    Vec<Scalar> ds_src, ds_dst;
    std::vector<Scalar> dalpha;
  };

  GatConfig config_;
  std::vector<ParamSection> sections_;
  std::size_t total_params_ = 0;
  std::vector<Scalar> flat_, grad_;
  Workspace ws_;
  const ObservationGraph* last_graph_ = nullptr;
};

}  // namespace negrl
