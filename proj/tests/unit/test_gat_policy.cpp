#include <doctest.h>

#include <cmath>
#include <vector>

#include "negrl/gat_policy.hpp"
#include "negrl/problem_gen.hpp"

using namespace negrl;

namespace {

Eigen::MatrixXd section_matrix(const std::vector<double>& params, const ParamSection& s) {
  Eigen::MatrixXd m(s.rows, s.cols);
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      m(r, c) = params[s.offset + static_cast<std::size_t>(r * s.cols + c)];
    }
  }
  return m;
}

std::vector<double> random_params(std::size_t count, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::vector<double> params(count);
  for (auto& p : params) p = scale * rng.normal();
  return params;
}

/// Literal re-implementation of the layer equation: for every node u,
/// h_u = phi(x_u || sum_{v in N(u)} alpha_uv psi(x_v)) with leaky-ReLU
/// attention scores softmaxed over N(u), heads concatenated, ReLU between
/// layers, then the three linear heads.
struct Oracle {
  Eigen::Vector2d accept;
  Eigen::VectorXd offers;
  double value = 0.0;
};

Oracle brute_force(const GatPolicyNet<double>& net, const ObservationGraph& g) {
  const auto params = net.params_as_double();
  const GraphTopology& topo = *g.topology;
  const int n = topo.num_nodes;
  const GatConfig& config = net.config();
  const int hw = net.head_width();

  auto mat = [&](const std::string& name) {
    return section_matrix(params, net.find_section(name));
  };

  Eigen::MatrixXd x = g.features;
  Eigen::MatrixXd out;
  for (int l = 0; l < config.layers; ++l) {
    out = Eigen::MatrixXd::Zero(n, config.hidden_width);
    for (int k = 0; k < config.heads; ++k) {
      const std::string prefix = "layer" + std::to_string(l) + ".head" + std::to_string(k) + ".";
      const Eigen::MatrixXd psi_w = mat(prefix + "psi_w");
      const Eigen::VectorXd psi_b = mat(prefix + "psi_b").col(0);
      const Eigen::VectorXd att_src = mat(prefix + "att_src").col(0);
      const Eigen::VectorXd att_dst = mat(prefix + "att_dst").col(0);
      const Eigen::MatrixXd phi_w = mat(prefix + "phi_w");
      const Eigen::VectorXd phi_b = mat(prefix + "phi_b").col(0);

      Eigen::MatrixXd p(n, hw);
      for (int u = 0; u < n; ++u) p.row(u) = (psi_w * x.row(u).transpose() + psi_b).transpose();

      for (int u = 0; u < n; ++u) {
        const int begin = topo.neighbor_offsets[static_cast<std::size_t>(u)];
        const int end = topo.neighbor_offsets[static_cast<std::size_t>(u) + 1];
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(hw);
        if (begin != end) {
          std::vector<double> scores;
          for (int j = begin; j < end; ++j) {
            const int v = topo.neighbors[static_cast<std::size_t>(j)];
            const double z = att_src.dot(p.row(u)) + att_dst.dot(p.row(v));
            scores.push_back(z > 0.0 ? z : 0.2 * z);
          }
          double norm = 0.0;
          for (double& s : scores) {
            s = std::exp(s);
            norm += s;
          }
          for (int j = begin; j < end; ++j) {
            const int v = topo.neighbors[static_cast<std::size_t>(j)];
            agg += scores[static_cast<std::size_t>(j - begin)] / norm * p.row(v).transpose();
          }
        }
        Eigen::VectorXd cat(x.cols() + hw);
        cat << x.row(u).transpose(), agg;
        out.block(u, k * hw, 1, hw) = (phi_w * cat + phi_b).transpose();
      }
    }
    if (l + 1 < config.layers) x = out.cwiseMax(0.0);
  }

  Oracle result;
  result.value = (mat("value_w") * out.row(0).transpose())(0) + mat("value_b")(0, 0);
  result.accept = mat("accept_w") * out.row(0).transpose() + mat("accept_b").col(0);
  result.offers =
      out.bottomRows(topo.total_values) * mat("offer_w").transpose() +
      Eigen::VectorXd::Constant(topo.total_values, mat("offer_b")(0, 0));
  return result;
}

ObservationGraph sample_graph(std::uint64_t seed, int t = 7) {
  const NegotiationProblem p = generate_problem(GeneratorConfig{}, seed);
  HistoryStats stats(p.domain);
  Rng rng(seed + 100);
  for (int i = 0; i < 6; ++i) {
    Outcome offer;
    for (int b = 0; b < p.domain.num_objectives(); ++b) {
      offer.push_back(static_cast<int>(rng.uniform_int(0, p.domain.value_count(b) - 1)));
    }
    stats.record_offer(rng.coin() ? Side::kSelf : Side::kOpponent, offer);
  }
  return build_graph(p.domain, p.utilities[0], stats, t, 40);
}

}  // namespace

TEST_CASE("forward matches the brute-force layer equation") {
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 8;
  config.heads = 2;
  GatPolicyNet<double> net(config);
  net.set_params_from_double(random_params(net.param_count(), 3, 0.4));

  // 4-node graph: head, one objective, two values
  const Domain d{{2}};
  UtilityFunction u;
  u.objective_weights = {1.0};
  u.value_weights = {{0.0, 1.0}};
  HistoryStats stats(d);
  stats.record_offer(Side::kOpponent, {1});
  const ObservationGraph g = build_graph(d, u, stats, 3, 40);
  REQUIRE(g.topology->num_nodes == 4);

  const PolicyLogits got = net.forward(g);
  const Oracle want = brute_force(net, g);
  CHECK(got.value == doctest::Approx(want.value).epsilon(1e-9));
  CHECK(got.accept_logits[0] == doctest::Approx(want.accept[0]).epsilon(1e-9));
  CHECK(got.accept_logits[1] == doctest::Approx(want.accept[1]).epsilon(1e-9));
  REQUIRE(got.offer_logits.size() == want.offers.size());
  for (Eigen::Index i = 0; i < want.offers.size(); ++i) {
    CHECK(got.offer_logits[i] == doctest::Approx(want.offers[i]).epsilon(1e-9));
  }
}

TEST_CASE("forward matches the oracle on generated problems") {
  GatConfig config;
  config.layers = 3;
  config.hidden_width = 12;
  config.heads = 3;
  GatPolicyNet<double> net(config);
  net.init_params(5);

  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    const ObservationGraph g = sample_graph(seed);
    const PolicyLogits got = net.forward(g);
    const Oracle want = brute_force(net, g);
    CHECK(got.value == doctest::Approx(want.value).epsilon(1e-9));
    for (Eigen::Index i = 0; i < want.offers.size(); ++i) {
      CHECK(got.offer_logits[i] == doctest::Approx(want.offers[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("attention weights are a distribution over each neighborhood") {
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 8;
  config.heads = 2;
  GatPolicyNet<float> net(config);
  net.init_params(9);
  const ObservationGraph g = sample_graph(21);
  net.forward(g);

  const GraphTopology& topo = *g.topology;
  for (int l = 0; l < config.layers; ++l) {
    for (int k = 0; k < config.heads; ++k) {
      const auto& alpha = net.attention_weights(l, k);
      REQUIRE(alpha.size() == topo.neighbors.size());
      for (int u = 0; u < topo.num_nodes; ++u) {
        const int begin = topo.neighbor_offsets[static_cast<std::size_t>(u)];
        const int end = topo.neighbor_offsets[static_cast<std::size_t>(u) + 1];
        float sum = 0.0f;
        for (int j = begin; j < end; ++j) {
          CHECK(alpha[static_cast<std::size_t>(j)] >= 0.0f);
          sum += alpha[static_cast<std::size_t>(j)];
        }
        if (begin != end) CHECK(sum == doctest::Approx(1.0f).epsilon(1e-5));
        // single-neighbor nodes (value nodes) concentrate all attention
        if (end - begin == 1) {
          CHECK(alpha[static_cast<std::size_t>(begin)] == doctest::Approx(1.0f));
        }
      }
    }
  }
}

TEST_CASE("swapping two objectives permutes the offer logits blockwise") {
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 8;
  config.heads = 2;
  GatPolicyNet<double> net(config);
  net.set_params_from_double(random_params(net.param_count(), 8, 0.3));

  const Domain d{{2, 3}};
  UtilityFunction u;
  u.objective_weights = {0.7, 0.3};
  u.value_weights = {{0.0, 1.0}, {1.0, 0.5, 0.0}};
  const Domain swapped{{3, 2}};
  UtilityFunction u_swapped;
  u_swapped.objective_weights = {0.3, 0.7};
  u_swapped.value_weights = {{1.0, 0.5, 0.0}, {0.0, 1.0}};

  const HistoryStats fresh_a(d), fresh_b(swapped);
  const PolicyLogits a = net.forward(build_graph(d, u, fresh_a, 4, 40));
  const PolicyLogits b = net.forward(build_graph(swapped, u_swapped, fresh_b, 4, 40));

  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
  CHECK(a.accept_logits[0] == doctest::Approx(b.accept_logits[0]).epsilon(1e-9));
  // objective 0's block (2 logits) moved behind objective 1's block (3 logits)
  for (int i = 0; i < 2; ++i) {
    CHECK(a.offer_logits[i] == doctest::Approx(b.offer_logits[3 + i]).epsilon(1e-9));
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(a.offer_logits[2 + i] == doctest::Approx(b.offer_logits[i]).epsilon(1e-9));
  }
}

TEST_CASE("one parameter set serves every domain size") {
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 8;
  config.heads = 2;
  GatPolicyNet<float> net(config);
  net.init_params(2);
  const std::size_t count = net.param_count();

  for (std::uint64_t seed = 40; seed < 48; ++seed) {
    const ObservationGraph g = sample_graph(seed);
    const PolicyLogits logits = net.forward(g);
    CHECK(logits.offer_logits.size() == g.topology->total_values);
    CHECK(net.param_count() == count);
    CHECK(std::isfinite(logits.value));
  }
}

TEST_CASE("parameter count follows the architecture formula, not the domain") {
  auto expected = [](int layers, int width, int heads) {
    const int hw = width / heads;
    std::size_t total = 0;
    for (int l = 0; l < layers; ++l) {
      const int in = l == 0 ? kNodeFeatureWidth : width;
      total += static_cast<std::size_t>(heads) *
               static_cast<std::size_t>(hw * in + hw + hw + hw + hw * (in + hw) + hw);
    }
    total += static_cast<std::size_t>(width + 1);      // value head
    total += static_cast<std::size_t>(2 * width + 2);  // accept head
    total += static_cast<std::size_t>(width + 1);      // offer head
    return total;
  };

  for (const auto& [l, w, k] : std::vector<std::tuple<int, int, int>>{
           {1, 4, 1}, {2, 8, 2}, {3, 12, 3}, {4, 256, 4}}) {
    GatConfig config;
    config.layers = l;
    config.hidden_width = w;
    config.heads = k;
    CHECK(GatPolicyNet<float>(config).param_count() == expected(l, w, k));
  }
}

TEST_CASE("initialization: orthogonal trunk, small heads, zero biases") {
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 16;
  config.heads = 2;
  GatPolicyNet<double> net(config);
  net.init_params(77);
  const auto params = net.params_as_double();

  for (const auto& s : net.sections()) {
    const Eigen::MatrixXd m = section_matrix(params, s);
    if (s.name.find("_b") != std::string::npos) {
      CHECK(m.norm() == 0.0);  // all biases zero
      continue;
    }
    double gain = std::sqrt(2.0);
    if (s.name == "value_w") gain = 1.0;
    if (s.name == "accept_w" || s.name == "offer_w") gain = 0.01;
    // semi-orthogonal: the smaller Gram side is gain^2 * identity
    const Eigen::MatrixXd gram =
        s.rows <= s.cols ? Eigen::MatrixXd(m * m.transpose()) : Eigen::MatrixXd(m.transpose() * m);
    const Eigen::MatrixXd target =
        gain * gain * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    CHECK((gram - target).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("zeroed offer head yields uniform offer logits") {
  GatConfig config;
  config.layers = 1;
  config.hidden_width = 4;
  config.heads = 1;
  GatPolicyNet<double> net(config);
  net.init_params(3);
  auto params = net.params_as_double();
  const auto& offer_w = net.find_section("offer_w");
  for (int i = 0; i < offer_w.rows * offer_w.cols; ++i) {
    params[offer_w.offset + static_cast<std::size_t>(i)] = 0.0;
  }
  net.set_params_from_double(params);

  const ObservationGraph g = sample_graph(60);
  const PolicyLogits logits = net.forward(g);
  for (Eigen::Index i = 1; i < logits.offer_logits.size(); ++i) {
    CHECK(logits.offer_logits[i] == doctest::Approx(logits.offer_logits[0]));
  }
}

TEST_CASE("identical value nodes of one objective get identical logits") {
  const Domain d{{3}};
  UtilityFunction u;
  u.objective_weights = {1.0};
  u.value_weights = {{0.0, 1.0, 1.0}};  // values 1 and 2 indistinguishable
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 8;
  config.heads = 2;
  GatPolicyNet<double> net(config);
  net.set_params_from_double(random_params(net.param_count(), 14, 0.3));
  const HistoryStats fresh(d);
  const PolicyLogits logits = net.forward(build_graph(d, u, fresh, 0, 40));
  CHECK(logits.offer_logits[1] == doctest::Approx(logits.offer_logits[2]).epsilon(1e-12));
  CHECK(logits.offer_logits[0] != doctest::Approx(logits.offer_logits[1]));
}

TEST_CASE("non-finite activations raise a numeric error naming the layer") {
  GatConfig config;
  config.layers = 2;
  config.hidden_width = 8;
  config.heads = 2;
  GatPolicyNet<double> net(config);
  auto params = random_params(net.param_count(), 4, 0.3);
  const auto& psi = net.find_section("layer0.head0.psi_w");
  for (int i = 0; i < psi.rows * psi.cols; ++i) {
    params[psi.offset + static_cast<std::size_t>(i)] = 1e308;
  }
  net.set_params_from_double(params);
  const ObservationGraph g = sample_graph(5);
  CHECK_THROWS_WITH_AS(net.forward(g), doctest::Contains("layer"), NumericError);
}

TEST_CASE("backward demands a matching forward") {
  GatConfig config;
  config.layers = 1;
  config.hidden_width = 4;
  config.heads = 1;
  GatPolicyNet<float> net(config);
  net.init_params(1);
  const ObservationGraph g = sample_graph(6);
  HeadGrads grads;
  grads.offer = Eigen::VectorXd::Zero(g.topology->total_values);
  CHECK_THROWS_AS(net.backward(g, grads), InvalidInputError);
  net.forward(g);
  CHECK_NOTHROW(net.backward(g, grads));
}

TEST_CASE("config validation") {
  GatConfig bad;
  bad.layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = GatConfig{};
  bad.hidden_width = 10;
  bad.heads = 4;  // not divisible
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
