#include "negrl/policy_model.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "negrl/errors.hpp"

namespace negrl {

namespace {

constexpr char kCheckpointMagic[8] = {'N', 'E', 'G', 'R', 'L', 'C', 'K', '1'};

class GnnPolicyModel final : public PolicyModel {
 public:
  explicit GnnPolicyModel(const GatConfig& config) : net_(config) {}

  PolicyKind kind() const override { return PolicyKind::kGnn; }
  std::size_t param_count() const override { return net_.param_count(); }
  const std::vector<ParamSection>& sections() const override { return net_.sections(); }
  void init_params(std::uint64_t seed) override { net_.init_params(seed); }
  std::vector<double> params_as_double() const override { return net_.params_as_double(); }
  void set_params_from_double(const std::vector<double>& params) override {
    net_.set_params_from_double(params);
  }

  Observation encode(const Domain& domain, const UtilityFunction& own_utility,
                     const HistoryStats& stats, int round, int deadline,
                     std::shared_ptr<const GraphTopology> topology) const override {
    if (!topology) topology = GraphTopology::build(domain);
    return build_graph(topology, own_utility, stats, round, deadline);
  }

  PolicyLogits forward_logits(const Observation& obs) override {
    return net_.forward(as_graph(obs));
  }
  void zero_grad() override { net_.zero_grad(); }
  void backward(const Observation& obs, const HeadGrads& head_grads) override {
    net_.backward(as_graph(obs), head_grads);
  }
  void accumulate_grad(std::vector<double>& into, double scale) const override {
    net_.accumulate_grad(into, scale);
  }

  const GatConfig& config() const { return net_.config(); }

 private:
  static const ObservationGraph& as_graph(const Observation& obs) {
    const auto* graph = std::get_if<ObservationGraph>(&obs);
    if (!graph) throw InvalidInputError("graph policy fed a non-graph observation");
    return *graph;
  }

  GatPolicyNet<float> net_;
};

class FlatPolicyModel final : public PolicyModel {
 public:
  explicit FlatPolicyModel(const FlatConfig& config) : net_(config) {}

  PolicyKind kind() const override { return PolicyKind::kFlat; }
  std::size_t param_count() const override { return net_.param_count(); }
  const std::vector<ParamSection>& sections() const override { return net_.sections(); }
  void init_params(std::uint64_t seed) override { net_.init_params(seed); }
  std::vector<double> params_as_double() const override { return net_.params_as_double(); }
  void set_params_from_double(const std::vector<double>& params) override {
    net_.set_params_from_double(params);
  }

  Observation encode(const Domain& domain, const UtilityFunction& /*own_utility*/,
                     const HistoryStats& stats, int round, int deadline,
                     std::shared_ptr<const GraphTopology> /*topology*/) const override {
    return encode_flat_observation(domain, stats, round, deadline);
  }

  PolicyLogits forward_logits(const Observation& obs) override {
    return net_.forward(as_flat(obs));
  }
  void zero_grad() override { net_.zero_grad(); }
  void backward(const Observation& obs, const HeadGrads& head_grads) override {
    net_.backward(as_flat(obs), head_grads);
  }
  void accumulate_grad(std::vector<double>& into, double scale) const override {
    net_.accumulate_grad(into, scale);
  }

  const FlatConfig& config() const { return net_.config(); }

 private:
  static const FlatObservation& as_flat(const Observation& obs) {
    const auto* flat = std::get_if<FlatObservation>(&obs);
    if (!flat) throw InvalidInputError("flat policy fed a non-flat observation");
    return *flat;
  }

  FlatPolicyNet<float> net_;
};

void write_doubles(std::ofstream& out, const std::vector<double>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& in, std::size_t count, const std::string& what) {
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw IoError("checkpoint truncated while reading " + what);
  return values;
}

}  // namespace

const std::vector<int>& observation_group_sizes(const Observation& obs) {
  if (const auto* graph = std::get_if<ObservationGraph>(&obs)) {
    return graph->topology->value_set_sizes;
  }
  return std::get<FlatObservation>(obs).group_sizes;
}

bool observation_accept_legal(const Observation& obs) {
  if (const auto* graph = std::get_if<ObservationGraph>(&obs)) {
    return graph->has_standing_offer;
  }
  return std::get<FlatObservation>(obs).has_standing_offer;
}

PolicyKind policy_kind_by_name(const std::string& name) {
  if (name == "gnn") return PolicyKind::kGnn;
  if (name == "flat") return PolicyKind::kFlat;
  throw ConfigError("unknown policy kind: " + name + " (expected gnn or flat)");
}

std::string policy_kind_name(PolicyKind kind) {
  return kind == PolicyKind::kGnn ? "gnn" : "flat";
}

PolicyOutput PolicyModel::forward(const Observation& obs) {
  const PolicyLogits logits = forward_logits(obs);
  return {make_distribution(logits.accept_logits, logits.offer_logits,
                            observation_group_sizes(obs), observation_accept_legal(obs)),
          logits.value};
}

std::unique_ptr<PolicyModel> make_gnn_policy(const GatConfig& config) {
  return std::make_unique<GnnPolicyModel>(config);
}

std::unique_ptr<PolicyModel> make_flat_policy(const FlatConfig& config) {
  return std::make_unique<FlatPolicyModel>(config);
}

void save_checkpoint(const std::string& path, const PolicyModel& model,
                     const CheckpointMeta& meta,
                     const std::vector<double>* params_override) {
  if (params_override && params_override->size() != model.param_count()) {
    throw InvalidInputError("parameter override does not match model size");
  }
  nlohmann::json header;
  header["format"] = 1;
  header["kind"] = policy_kind_name(model.kind());
  if (model.kind() == PolicyKind::kGnn) {
    const auto& config = dynamic_cast<const GnnPolicyModel&>(model).config();
    header["config"] = {{"layers", config.layers},
                        {"hidden_width", config.hidden_width},
                        {"heads", config.heads}};
  } else {
    const auto& config = dynamic_cast<const FlatPolicyModel&>(model).config();
    header["config"] = {{"hidden_layers", config.hidden_layers},
                        {"hidden_width", config.hidden_width},
                        {"group_sizes", config.group_sizes}};
  }
  header["param_count"] = model.param_count();
  nlohmann::json section_table = nlohmann::json::array();
  for (const auto& s : model.sections()) {
    section_table.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
  }
  header["sections"] = std::move(section_table);
  header["train_seed"] = meta.train_seed;
  header["step"] = meta.step;
  header["episodes"] = meta.episodes;
  header["has_adam"] = meta.has_adam;
  header["adam_t"] = meta.adam_t;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t header_len = static_cast<std::uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  write_doubles(out, params_override ? *params_override : model.params_as_double());
  if (meta.has_adam) {
    if (meta.adam_m.size() != model.param_count() || meta.adam_v.size() != model.param_count()) {
      throw InvalidInputError("adam moment vectors do not match parameter count");
    }
    write_doubles(out, meta.adam_m);
    write_doubles(out, meta.adam_v);
  }
  out.flush();
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw InvalidInputError("not a checkpoint file (bad magic): " + path);
  }
  std::uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) throw IoError("checkpoint truncated while reading header length");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), header_len);
  if (!in) throw IoError("checkpoint truncated while reading header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (header.at("format").get<int>() != 1) {
    throw InvalidInputError("unsupported checkpoint format version");
  }

  LoadedCheckpoint loaded;
  const std::string kind = header.at("kind").get<std::string>();
  if (kind == "gnn") {
    GatConfig config;
    config.layers = header.at("config").at("layers").get<int>();
    config.hidden_width = header.at("config").at("hidden_width").get<int>();
    config.heads = header.at("config").at("heads").get<int>();
    loaded.model = make_gnn_policy(config);
  } else if (kind == "flat") {
    FlatConfig config;
    config.hidden_layers = header.at("config").at("hidden_layers").get<int>();
    config.hidden_width = header.at("config").at("hidden_width").get<int>();
    config.group_sizes = header.at("config").at("group_sizes").get<std::vector<int>>();
    loaded.model = make_flat_policy(config);
  } else {
    throw InvalidInputError("unknown policy kind in checkpoint: " + kind);
  }

  const auto param_count = header.at("param_count").get<std::size_t>();
  if (param_count != loaded.model->param_count()) {
    throw InvalidInputError("checkpoint parameter count does not match architecture");
  }
  const auto& sections = loaded.model->sections();
  const auto& table = header.at("sections");
  if (table.size() != sections.size()) {
    throw InvalidInputError("checkpoint section table does not match architecture");
  }
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (table[i].at("name").get<std::string>() != sections[i].name ||
        table[i].at("rows").get<int>() != sections[i].rows ||
        table[i].at("cols").get<int>() != sections[i].cols) {
      throw InvalidInputError("checkpoint section mismatch at " + sections[i].name);
    }
  }

  loaded.meta.train_seed = header.at("train_seed").get<std::uint64_t>();
  loaded.meta.step = header.at("step").get<std::int64_t>();
  loaded.meta.episodes = header.at("episodes").get<std::int64_t>();
  loaded.meta.has_adam = header.at("has_adam").get<bool>();
  loaded.meta.adam_t = header.at("adam_t").get<std::int64_t>();

  loaded.params = read_doubles(in, param_count, "parameters");
  loaded.model->set_params_from_double(loaded.params);
  if (loaded.meta.has_adam) {
    loaded.meta.adam_m = read_doubles(in, param_count, "adam m");
    loaded.meta.adam_v = read_doubles(in, param_count, "adam v");
  }
  return loaded;
}

}  // namespace negrl
