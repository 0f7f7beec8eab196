// Python bindings for the negotiation RL stack: problem generation and
// serialization, the alternating-offers protocol, scripted opponents, graph
// encoding, checkpointed policies, training, evaluation and the statistics
// helpers. Matrices cross the boundary as nested lists to keep the module
// dependency-free.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "negrl/distribution.hpp"
#include "negrl/domain.hpp"
#include "negrl/errors.hpp"
#include "negrl/eval_harness.hpp"
#include "negrl/graph_encoder.hpp"
#include "negrl/opponents.hpp"
#include "negrl/policy_model.hpp"
#include "negrl/problem_gen.hpp"
#include "negrl/problem_io.hpp"
#include "negrl/protocol.hpp"
#include "negrl/rng.hpp"
#include "negrl/svg_plot.hpp"
#include "negrl/trainer.hpp"

namespace py = pybind11;
using namespace negrl;

namespace {

HistoryStats replay_history(const NegotiationProblem& problem, int agent,
                            const std::vector<std::pair<int, Outcome>>& offers) {
  HistoryStats stats(problem.domain);
  for (const auto& [who, outcome] : offers) {
    if (who != 0 && who != 1) throw InvalidInputError("offer agent id must be 0 or 1");
    stats.record_offer(who == agent ? Side::kSelf : Side::kOpponent, outcome);
  }
  return stats;
}

/// A checkpointed policy plus its metadata, ready for forward passes.
struct Policy {
  std::unique_ptr<PolicyModel> model;
  CheckpointMeta meta;
};

py::dict distribution_to_dict(const PolicyOutput& output) {
  py::dict result;
  result["value"] = output.value;
  result["accept_probs"] =
      std::vector<double>{output.dist.accept_probs[0], output.dist.accept_probs[1]};
  std::vector<std::vector<double>> value_probs;
  for (const auto& probs : output.dist.value_probs) {
    value_probs.emplace_back(probs.data(), probs.data() + probs.size());
  }
  result["value_probs"] = value_probs;
  result["accept_legal"] = output.dist.accept_legal;
  return result;
}

py::dict episode_result_to_dict(const EpisodeResult& result) {
  py::dict d;
  d["agreement"] = result.agreement ? py::cast(*result.agreement) : py::none();
  d["utilities"] = std::vector<double>{result.utilities[0], result.utilities[1]};
  d["rounds_used"] = result.rounds_used;
  return d;
}

}  // namespace

PYBIND11_MODULE(negrl, m) {
  m.doc() = "Bilateral automated negotiation with reinforcement learning: "
            "alternating-offers protocol, problem generator, scripted opponents, "
            "graph-attention policies, PPO training and tournament evaluation.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<ProtocolViolationError>(m, "ProtocolViolationError", PyExc_ValueError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // ---- domain and utilities -----------------------------------------------
  py::class_<Domain>(m, "Domain")
      .def(py::init<std::vector<int>>(), py::arg("value_set_sizes"))
      .def_property_readonly("num_objectives", &Domain::num_objectives)
      .def_property_readonly("value_set_sizes",
                             [](const Domain& d) { return d.value_set_sizes(); })
      .def_property_readonly("outcome_space_size", &Domain::outcome_space_size)
      .def("__repr__", [](const Domain& d) {
        std::string out = "Domain([";
        for (std::size_t i = 0; i < d.value_set_sizes().size(); ++i) {
          if (i) out += ", ";
          out += std::to_string(d.value_set_sizes()[i]);
        }
        return out + "])";
      });

  py::class_<UtilityFunction>(m, "UtilityFunction")
      .def(py::init<>())
      .def_readwrite("objective_weights", &UtilityFunction::objective_weights)
      .def_readwrite("value_weights", &UtilityFunction::value_weights);

  py::class_<NegotiationProblem>(m, "Problem")
      .def(py::init<>())
      .def_readwrite("domain", &NegotiationProblem::domain)
      .def_property(
          "utilities",
          [](const NegotiationProblem& p) {
            return std::vector<UtilityFunction>{p.utilities[0], p.utilities[1]};
          },
          [](NegotiationProblem& p, const std::vector<UtilityFunction>& us) {
            if (us.size() != 2) throw InvalidInputError("a problem has exactly two utilities");
            p.utilities[0] = us[0];
            p.utilities[1] = us[1];
          })
      .def("validate", [](const NegotiationProblem& p) { p.validate(); })
      .def("to_json", [](const NegotiationProblem& p) { return problem_to_string(p); })
      .def_static("from_json",
                  [](const std::string& text) { return problem_from_string(text); });

  m.def("utility", &utility, py::arg("utility_fn"), py::arg("domain"), py::arg("outcome"),
        "Additive utility of an outcome: sum of objective weight times value weight.");
  m.def("save_problem", &save_problem, py::arg("path"), py::arg("problem"));
  m.def("load_problem", &load_problem, py::arg("path"));

  // ---- generation ----------------------------------------------------------
  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init<>())
      .def_readwrite("min_outcomes", &GeneratorConfig::min_outcomes)
      .def_readwrite("max_outcomes", &GeneratorConfig::max_outcomes)
      .def_readwrite("min_objectives", &GeneratorConfig::min_objectives)
      .def_readwrite("max_objectives", &GeneratorConfig::max_objectives)
      .def_readwrite("min_values", &GeneratorConfig::min_values)
      .def_readwrite("max_values", &GeneratorConfig::max_values)
      .def_readwrite("max_attempts", &GeneratorConfig::max_attempts)
      .def_readwrite("seed", &GeneratorConfig::seed)
      .def("validate", &GeneratorConfig::validate);

  m.def("generate_problem", &generate_problem, py::arg("config"), py::arg("seed"),
        "Draws a random negotiation problem whose outcome space fits the configured band.");
  m.def("substream_seed", [](std::uint64_t root, const std::vector<std::uint64_t>& path) {
          std::uint64_t s = mix64(root);
          for (const std::uint64_t tag : path) s = mix64(s ^ mix64(tag));
          return s;
        },
        py::arg("root"), py::arg("path"),
        "Derives a child seed, matching the C++ substream derivation.");

  // ---- protocol ------------------------------------------------------------
  py::class_<Accept>(m, "Accept").def(py::init<>());
  py::class_<Offer>(m, "Offer")
      .def(py::init([](Outcome outcome) { return Offer{std::move(outcome)}; }),
           py::arg("outcome"))
      .def_readwrite("outcome", &Offer::outcome);

  py::enum_<SessionStatus>(m, "SessionStatus")
      .value("RUNNING", SessionStatus::kRunning)
      .value("AGREEMENT", SessionStatus::kAgreement)
      .value("FAILED", SessionStatus::kFailed);

  py::class_<SessionState>(m, "SessionState")
      .def_static("start", &SessionState::start, py::arg("deadline") = 40,
                  py::arg("first_turn") = 0)
      .def_readonly("round", &SessionState::round)
      .def_readonly("deadline", &SessionState::deadline)
      .def_readonly("turn", &SessionState::turn)
      .def_readonly("status", &SessionState::status)
      .def_readonly("history", &SessionState::history)
      .def_property_readonly("running", &SessionState::running)
      .def_property_readonly("standing_offer",
                             [](const SessionState& s) -> std::optional<Outcome> {
                               const Outcome* offer = s.standing_offer();
                               if (offer == nullptr) return std::nullopt;
                               return *offer;
                             })
      .def_property_readonly("progress", &SessionState::progress);

  m.def("step",
        [](SessionState& state, const std::variant<Accept, Offer>& action,
           const NegotiationProblem& problem) -> py::object {
          const Action native = std::holds_alternative<Accept>(action)
                                    ? Action(std::get<Accept>(action))
                                    : Action(std::get<Offer>(action));
          const auto result =
              step(state, native, problem.domain, problem.utilities[0], problem.utilities[1]);
          if (!result) return py::none();
          return episode_result_to_dict(*result);
        },
        py::arg("state"), py::arg("action"), py::arg("problem"),
        "Applies one action; returns the episode result dict when the session ended.");

  // ---- opponents -----------------------------------------------------------
  py::enum_<OpponentKind>(m, "OpponentKind")
      .value("BOULWARE", OpponentKind::kBoulware)
      .value("CONCEDER", OpponentKind::kConceder)
      .value("LINEAR", OpponentKind::kLinear)
      .value("RANDOM", OpponentKind::kRandom);

  py::class_<OpponentSpec>(m, "OpponentSpec")
      .def(py::init<>())
      .def_readwrite("kind", &OpponentSpec::kind)
      .def_readwrite("concession_exponent", &OpponentSpec::concession_exponent)
      .def_readwrite("reservation", &OpponentSpec::reservation)
      .def_readwrite("accept_threshold", &OpponentSpec::accept_threshold)
      .def("validate", &OpponentSpec::validate)
      .def("__repr__", [](const OpponentSpec& s) { return "OpponentSpec(" + opponent_name(s) + ")"; });

  m.def("opponent_spec", &opponent_spec_by_name, py::arg("name"),
        "Baseline spec by name: boulware, conceder, linear or random.");
  m.def("baseline_opponents", &baseline_opponents);
  m.def("target_utility", &target_utility, py::arg("spec"), py::arg("progress"),
        "Concession target of a time-dependent strategy at progress in [0, 1].");

  py::class_<Opponent>(m, "Opponent")
      .def("reset",
           [](Opponent& o, const NegotiationProblem& problem, int agent, std::uint64_t seed) {
             if (agent != 0 && agent != 1) throw InvalidInputError("agent id must be 0 or 1");
             o.reset(problem.domain, problem.utilities[static_cast<std::size_t>(agent)], seed);
           },
           py::arg("problem"), py::arg("agent"), py::arg("seed"))
      .def("act", &Opponent::act, py::arg("session"),
           "Returns Accept or Offer for the current session state.");

  m.def("make_opponent", &make_opponent, py::arg("spec"));

  // ---- observations --------------------------------------------------------
  py::class_<ObservationGraph>(m, "ObservationGraph")
      .def_property_readonly("num_nodes",
                             [](const ObservationGraph& g) { return g.topology->num_nodes; })
      .def_property_readonly("edges",
                             [](const ObservationGraph& g) { return g.topology->edges; })
      .def_property_readonly("features",
                             [](const ObservationGraph& g) {
                               std::vector<std::vector<double>> rows(
                                   static_cast<std::size_t>(g.features.rows()));
                               for (Eigen::Index r = 0; r < g.features.rows(); ++r) {
                                 for (Eigen::Index c = 0; c < g.features.cols(); ++c) {
                                   rows[static_cast<std::size_t>(r)].push_back(g.features(r, c));
                                 }
                               }
                               return rows;
                             })
      .def_readonly("has_standing_offer", &ObservationGraph::has_standing_offer)
      .def("__str__", &graph_to_string);

  m.def("encode_graph",
        [](const NegotiationProblem& problem, int agent,
           const std::vector<std::pair<int, Outcome>>& offers, int round, int deadline) {
          if (agent != 0 && agent != 1) throw InvalidInputError("agent id must be 0 or 1");
          const HistoryStats stats = replay_history(problem, agent, offers);
          return build_graph(problem.domain, problem.utilities[static_cast<std::size_t>(agent)],
                             stats, round, deadline);
        },
        py::arg("problem"), py::arg("agent"), py::arg("offers"), py::arg("round"),
        py::arg("deadline") = 40,
        "Observation graph for `agent` given the (agent, outcome) offer history.");

  // ---- policies ------------------------------------------------------------
  py::class_<Policy>(m, "Policy")
      .def_property_readonly("kind",
                             [](const Policy& p) { return policy_kind_name(p.model->kind()); })
      .def_property_readonly("param_count", [](const Policy& p) { return p.model->param_count(); })
      .def_property_readonly("train_seed", [](const Policy& p) { return p.meta.train_seed; })
      .def_property_readonly("step", [](const Policy& p) { return p.meta.step; })
      .def_property_readonly("episodes", [](const Policy& p) { return p.meta.episodes; })
      .def("params", [](const Policy& p) { return p.model->params_as_double(); })
      .def("distribution",
           [](Policy& p, const NegotiationProblem& problem, int agent,
              const std::vector<std::pair<int, Outcome>>& offers, int round, int deadline) {
             if (agent != 0 && agent != 1) throw InvalidInputError("agent id must be 0 or 1");
             const HistoryStats stats = replay_history(problem, agent, offers);
             const Observation obs =
                 p.model->encode(problem.domain,
                                 problem.utilities[static_cast<std::size_t>(agent)], stats,
                                 round, deadline);
             return distribution_to_dict(p.model->forward(obs));
           },
           py::arg("problem"), py::arg("agent"), py::arg("offers"), py::arg("round"),
           py::arg("deadline") = 40,
           "Action distribution and state value for `agent` at the given step.");

  m.def("load_policy",
        [](const std::string& path) {
          LoadedCheckpoint loaded = load_checkpoint(path);
          return Policy{std::move(loaded.model), std::move(loaded.meta)};
        },
        py::arg("path"), "Loads a training checkpoint into a ready policy.");

  // ---- training and evaluation ---------------------------------------------
  m.def("train",
        [](const std::string& config_json, const std::string& run_dir) {
          const TrainerConfig config = trainer_config_from_json(config_json);
          config.validate();
          Trainer trainer(config, run_dir);
          {
            py::gil_scoped_release release;
            trainer.train();
          }
          py::dict summary;
          summary["steps"] = trainer.steps_done();
          summary["episodes"] = trainer.episodes_done();
          summary["batches"] = trainer.batches_done();
          summary["run_dir"] = run_dir;
          return summary;
        },
        py::arg("config_json"), py::arg("run_dir"),
        "Runs PPO training from a JSON config; artifacts land in run_dir.");

  m.def("trainer_config_defaults", [] { return trainer_config_to_json(TrainerConfig{}); },
        "Default training configuration as a JSON string.");

  m.def("evaluate",
        [](const std::string& config_json) {
          const EvalConfig config = eval_config_from_json(config_json);
          EvalResults results;
          {
            py::gil_scoped_release release;
            results = run_tournament(config);
          }
          py::dict out;
          out["results_csv"] = results_to_csv(results);
          out["summary_csv"] = summary_to_csv(results);
          return out;
        },
        py::arg("config_json"),
        "Tournament-evaluates checkpoints from a JSON config; returns the CSV artifacts.");

  m.def("aggregate_ci", &aggregate_ci, py::arg("samples"), py::arg("level") = 0.99,
        "Student-t mean and confidence half-width over per-seed samples.");

  m.def("render_run_plots", &render_run_plots, py::arg("metrics_csv_path"),
        py::arg("summary_csv_path"), py::arg("out_dir"),
        "Renders the SVG plots for a run and/or evaluation; returns written paths.");
}
