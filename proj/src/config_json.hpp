#pragma once

// Internal helpers shared by the trainer/eval config parsers. Strict by
// construction: unknown keys are rejected with their path.

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "negrl/errors.hpp"
#include "negrl/opponents.hpp"
#include "negrl/problem_io.hpp"
#include "negrl/trainer.hpp"

namespace negrl::config_json {

inline void check_keys(const nlohmann::json& object, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config key: " + path + item.key());
  }
}

inline nlohmann::json opponent_to_json(const OpponentSpec& spec) {
  return {{"kind", opponent_name(spec)},
          {"concession_exponent", spec.concession_exponent},
          {"reservation", spec.reservation},
          {"accept_threshold", spec.accept_threshold}};
}

inline OpponentSpec opponent_from_json(const nlohmann::json& node, const std::string& path) {
  if (node.is_string()) return opponent_spec_by_name(node.get<std::string>());
  if (!node.is_object()) throw ConfigError("opponent entry must be a name or object at " + path);
  check_keys(node, path, {"kind", "concession_exponent", "reservation", "accept_threshold"});
  OpponentSpec spec = opponent_spec_by_name(node.at("kind").get<std::string>());
  if (node.contains("concession_exponent")) {
    spec.concession_exponent = node.at("concession_exponent").get<double>();
  }
  if (node.contains("reservation")) spec.reservation = node.at("reservation").get<double>();
  if (node.contains("accept_threshold")) {
    spec.accept_threshold = node.at("accept_threshold").get<double>();
  }
  spec.validate();
  return spec;
}

inline std::vector<OpponentSpec> opponents_from_json(const nlohmann::json& list,
                                                     const std::string& path) {
  if (!list.is_array()) throw ConfigError(path + " must be a list");
  std::vector<OpponentSpec> specs;
  for (std::size_t i = 0; i < list.size(); ++i) {
    specs.push_back(opponent_from_json(list[i], path + "[" + std::to_string(i) + "]."));
  }
  return specs;
}

inline nlohmann::json problems_to_json(const ProblemSource& problems) {
  if (problems.mode == ProblemSource::Mode::kRandom) {
    const auto& g = problems.generator;
    return {{"mode", "random"},
            {"generator",
             {{"min_outcomes", g.min_outcomes},
              {"max_outcomes", g.max_outcomes},
              {"min_objectives", g.min_objectives},
              {"max_objectives", g.max_objectives},
              {"min_values", g.min_values},
              {"max_values", g.max_values},
              {"max_attempts", g.max_attempts}}}};
  }
  nlohmann::json node{{"mode", "fixed"}};
  if (!problems.fixed_path.empty()) node["file"] = problems.fixed_path;
  // embed the document so snapshots stay valid if the file moves
  node["problem"] = nlohmann::json::parse(problem_to_string(*problems.fixed));
  return node;
}

inline ProblemSource problems_from_json(const nlohmann::json& node, const std::string& path) {
  check_keys(node, path, {"mode", "generator", "file", "problem"});
  ProblemSource problems;
  const std::string mode = node.at("mode").get<std::string>();
  if (mode == "random") {
    problems.mode = ProblemSource::Mode::kRandom;
    if (node.contains("generator")) {
      const auto& g = node.at("generator");
      check_keys(g, path + "generator.",
                 {"min_outcomes", "max_outcomes", "min_objectives", "max_objectives",
                  "min_values", "max_values", "max_attempts"});
      auto& gen = problems.generator;
      if (g.contains("min_outcomes")) gen.min_outcomes = g.at("min_outcomes").get<std::uint64_t>();
      if (g.contains("max_outcomes")) gen.max_outcomes = g.at("max_outcomes").get<std::uint64_t>();
      if (g.contains("min_objectives")) gen.min_objectives = g.at("min_objectives").get<int>();
      if (g.contains("max_objectives")) gen.max_objectives = g.at("max_objectives").get<int>();
      if (g.contains("min_values")) gen.min_values = g.at("min_values").get<int>();
      if (g.contains("max_values")) gen.max_values = g.at("max_values").get<int>();
      if (g.contains("max_attempts")) gen.max_attempts = g.at("max_attempts").get<int>();
    }
  } else if (mode == "fixed") {
    problems.mode = ProblemSource::Mode::kFixed;
    if (node.contains("file")) {
      problems.fixed_path = node.at("file").get<std::string>();
      problems.fixed = load_problem(problems.fixed_path);
    }
    if (node.contains("problem")) {
      problems.fixed = problem_from_string(node.at("problem").dump());
    }
    if (!problems.fixed) {
      throw ConfigError("fixed problem mode needs a 'file' or inline 'problem' at " + path);
    }
  } else {
    throw ConfigError(path + "mode must be random or fixed");
  }
  return problems;
}

inline GeneratorConfig generator_from_json(const nlohmann::json& node, const std::string& path) {
  check_keys(node, path, {"min_outcomes", "max_outcomes", "min_objectives", "max_objectives",
                          "min_values", "max_values", "max_attempts", "seed"});
  GeneratorConfig gen;
  if (node.contains("min_outcomes")) gen.min_outcomes = node.at("min_outcomes").get<std::uint64_t>();
  if (node.contains("max_outcomes")) gen.max_outcomes = node.at("max_outcomes").get<std::uint64_t>();
  if (node.contains("min_objectives")) gen.min_objectives = node.at("min_objectives").get<int>();
  if (node.contains("max_objectives")) gen.max_objectives = node.at("max_objectives").get<int>();
  if (node.contains("min_values")) gen.min_values = node.at("min_values").get<int>();
  if (node.contains("max_values")) gen.max_values = node.at("max_values").get<int>();
  if (node.contains("max_attempts")) gen.max_attempts = node.at("max_attempts").get<int>();
  if (node.contains("seed")) gen.seed = node.at("seed").get<std::uint64_t>();
  return gen;
}

}  // namespace negrl::config_json
