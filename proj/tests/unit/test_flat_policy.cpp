#include <doctest.h>

#include <cmath>
#include <vector>

#include "negrl/flat_policy.hpp"

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

FlatObservation sample_observation(const Domain& domain, std::uint64_t seed, int round = 9) {
  HistoryStats stats(domain);
  Rng rng(seed);
  for (int i = 0; i < 5; ++i) {
    Outcome offer;
    for (int b = 0; b < domain.num_objectives(); ++b) {
      offer.push_back(static_cast<int>(rng.uniform_int(0, domain.value_count(b) - 1)));
    }
    stats.record_offer(rng.coin() ? Side::kSelf : Side::kOpponent, offer);
  }
  return encode_flat_observation(domain, stats, round, 40);
}

}  // namespace

TEST_CASE("flat observation layout: four history slots per value, then progress") {
  const Domain d{{2, 3}};
  HistoryStats stats(d);
  stats.record_offer(Side::kOpponent, {1, 0});
  stats.record_offer(Side::kSelf, {0, 2});
  stats.record_offer(Side::kOpponent, {1, 2});

  const FlatObservation obs = encode_flat_observation(d, stats, 10, 40);
  CHECK(obs.group_sizes == std::vector<int>{2, 3});
  CHECK(obs.has_standing_offer);
  REQUIRE(obs.features.size() == 4 * 5 + 1);

  // per value: [opp last, own last, opp fraction, own fraction]
  auto slot = [&](int value_index, int part) { return obs.features[4 * value_index + part]; };
  // objective 0: opponent offered value 1 twice, self offered value 0 once
  CHECK(slot(0, 0) == 0.0);
  CHECK(slot(1, 0) == 1.0);
  CHECK(slot(0, 1) == 1.0);
  CHECK(slot(1, 1) == 0.0);
  CHECK(slot(0, 2) == doctest::Approx(0.0));
  CHECK(slot(1, 2) == doctest::Approx(1.0));
  CHECK(slot(0, 3) == doctest::Approx(1.0));
  // objective 1 (values 2..4 in flat order): opponent offered 0 then 2
  CHECK(slot(2, 0) == 0.0);
  CHECK(slot(4, 0) == 1.0);
  CHECK(slot(2, 2) == doctest::Approx(0.5));
  CHECK(slot(4, 2) == doctest::Approx(0.5));
  CHECK(slot(4, 3) == doctest::Approx(1.0));
  CHECK(obs.features[20] == doctest::Approx(0.25));  // 10 / 40
}

TEST_CASE("flat observation on a fresh session") {
  const Domain d{{2, 2}};
  const HistoryStats stats(d);
  const FlatObservation obs = encode_flat_observation(d, stats, 0, 40);
  CHECK_FALSE(obs.has_standing_offer);
  CHECK(obs.features.norm() == 0.0);
}

TEST_CASE("flat observation validation") {
  const Domain d{{2, 3}};
  const HistoryStats stats(d);
  CHECK_THROWS_AS(encode_flat_observation(d, stats, -1, 40), InvalidInputError);
  CHECK_THROWS_AS(encode_flat_observation(d, stats, 41, 40), InvalidInputError);
  CHECK_THROWS_AS(encode_flat_observation(d, stats, 0, 0), InvalidInputError);
  const Domain other{{2, 2}};
  CHECK_THROWS_AS(encode_flat_observation(other, stats, 0, 40), InvalidInputError);
}

TEST_CASE("forward matches a hand-rolled MLP") {
  FlatConfig config;
  config.hidden_layers = 2;
  config.hidden_width = 6;
  config.group_sizes = {2, 3};
  FlatPolicyNet<double> net(config);
  const auto params = random_params(net.param_count(), 7, 0.4);
  net.set_params_from_double(params);

  const Domain d{{2, 3}};
  const FlatObservation obs = sample_observation(d, 30);
  const PolicyLogits got = net.forward(obs);

  auto mat = [&](const std::string& name) { return section_matrix(params, net.find_section(name)); };
  Eigen::VectorXd a = obs.features;
  for (int l = 0; l < config.hidden_layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    a = (mat(prefix + "w") * a + mat(prefix + "b").col(0)).cwiseMax(0.0);
  }
  const double value = (mat("value_w") * a)(0) + mat("value_b")(0, 0);
  const Eigen::VectorXd accept = mat("accept_w") * a + mat("accept_b").col(0);
  const Eigen::VectorXd offers = mat("offer_w") * a + mat("offer_b").col(0);

  CHECK(got.value == doctest::Approx(value).epsilon(1e-12));
  CHECK(got.accept_logits[0] == doctest::Approx(accept[0]).epsilon(1e-12));
  CHECK(got.accept_logits[1] == doctest::Approx(accept[1]).epsilon(1e-12));
  REQUIRE(got.offer_logits.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(got.offer_logits[i] == doctest::Approx(offers[i]).epsilon(1e-12));
  }
}

TEST_CASE("flat net is pinned to one domain shape") {
  FlatConfig config;
  config.hidden_layers = 1;
  config.hidden_width = 4;
  config.group_sizes = {2, 3};
  FlatPolicyNet<float> net(config);
  net.init_params(1);

  const FlatObservation ok = sample_observation(Domain{{2, 3}}, 1);
  CHECK_NOTHROW(net.forward(ok));
  const FlatObservation wrong = sample_observation(Domain{{3, 2}}, 1);
  CHECK_THROWS_AS(net.forward(wrong), InvalidInputError);

  FlatObservation truncated = sample_observation(Domain{{2, 3}}, 2);
  truncated.features.conservativeResize(7);
  CHECK_THROWS_AS(net.forward(truncated), InvalidInputError);
}

TEST_CASE("backward gradients agree with central finite differences") {
  FlatConfig config;
  config.hidden_layers = 1;
  config.hidden_width = 8;
  config.group_sizes = {2, 3};
  FlatPolicyNet<double> net(config);
  auto params = random_params(net.param_count(), 19, 0.5);
  net.set_params_from_double(params);

  const Domain d{{2, 3}};
  const FlatObservation obs = sample_observation(d, 77);

  // scalar probe: fixed random combination of every head output
  Rng rng(5);
  HeadGrads probe;
  probe.value = rng.normal();
  probe.accept = Eigen::Vector2d(rng.normal(), rng.normal());
  probe.offer.resize(5);
  for (int i = 0; i < 5; ++i) probe.offer[i] = rng.normal();
  auto loss = [&]() {
    const PolicyLogits out = net.forward(obs);
    return probe.value * out.value + probe.accept.dot(out.accept_logits) +
           probe.offer.dot(out.offer_logits);
  };

  loss();
  net.zero_grad();
  net.backward(obs, probe);
  std::vector<double> analytic(net.param_count(), 0.0);
  net.accumulate_grad(analytic, 1.0);

  const double h = 1e-6;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto bumped = params;
    bumped[i] += h;
    net.set_params_from_double(bumped);
    const double up = loss();
    bumped[i] -= 2 * h;
    net.set_params_from_double(bumped);
    const double down = loss();
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(fd - analytic[i]) / std::max(1.0, std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("flat init: semi-orthogonal weights, zero biases") {
  FlatConfig config;
  config.hidden_layers = 2;
  config.hidden_width = 16;
  config.group_sizes = {4, 4};
  FlatPolicyNet<double> net(config);
  net.init_params(3);
  const auto params = net.params_as_double();

  for (const auto& s : net.sections()) {
    const Eigen::MatrixXd m = section_matrix(params, s);
    if (s.name.find(".b") != std::string::npos || s.name.find("_b") != std::string::npos) {
      CHECK(m.norm() == 0.0);
      continue;
    }
    double gain = std::sqrt(2.0);
    if (s.name == "value_w") gain = 1.0;
    if (s.name == "accept_w" || s.name == "offer_w") gain = 0.01;
    const Eigen::MatrixXd gram =
        s.rows <= s.cols ? Eigen::MatrixXd(m * m.transpose()) : Eigen::MatrixXd(m.transpose() * m);
    const Eigen::MatrixXd target =
        gain * gain * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    CHECK((gram - target).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("flat backward guards") {
  FlatConfig config;
  config.hidden_layers = 1;
  config.hidden_width = 4;
  config.group_sizes = {2};
  FlatPolicyNet<double> net(config);
  net.init_params(1);
  const FlatObservation obs = sample_observation(Domain{{2}}, 4);
  HeadGrads grads;
  grads.offer = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(net.backward(obs, grads), InvalidInputError);
  net.forward(obs);
  grads.offer = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(net.backward(obs, grads), InvalidInputError);
}

TEST_CASE("flat config validation") {
  FlatConfig bad;
  bad.group_sizes = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.group_sizes = {2, 0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.group_sizes = {2};
  bad.hidden_layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
