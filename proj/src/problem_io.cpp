#include "negrl/problem_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace negrl {

namespace {

using nlohmann::json;

void require_keys(const json& object, std::initializer_list<const char*> keys,
                  const std::string& where) {
  for (const char* key : keys) {
    if (!object.contains(key)) {
      throw IoError("problem document: missing key '" + std::string(key) +
                    "' in " + where);
    }
  }
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : keys) known = known || item.key() == key;
    if (!known) {
      throw IoError("problem document: unknown key '" + item.key() + "' in " +
                    where);
    }
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string problem_to_string(const NegotiationProblem& problem) {
  std::ostringstream out;
  const Domain& domain = problem.domain;
  out << "{\n  \"format\": 1,\n  \"domain\": {\"objectives\": [";
  for (int b = 0; b < domain.num_objectives(); ++b) {
    if (b > 0) out << ", ";
    out << "{\"size\": " << domain.value_count(b) << "}";
  }
  out << "]},\n  \"utilities\": [\n";
  for (int agent = 0; agent < 2; ++agent) {
    const UtilityFunction& u = problem.utilities[agent];
    out << "    {\"objectives\": [\n";
    for (int b = 0; b < domain.num_objectives(); ++b) {
      out << "      {\"size\": " << domain.value_count(b)
          << ", \"weight\": " << format_double(u.objective_weights[static_cast<std::size_t>(b)])
          << ", \"value_weights\": [";
      const auto& vw = u.value_weights[static_cast<std::size_t>(b)];
      for (std::size_t v = 0; v < vw.size(); ++v) {
        if (v > 0) out << ", ";
        out << format_double(vw[v]);
      }
      out << "]}";
      if (b + 1 < domain.num_objectives()) out << ",";
      out << "\n";
    }
    out << "    ]}";
    if (agent == 0) out << ",";
    out << "\n";
  }
  out << "  ]\n}\n";
  return out.str();
}

NegotiationProblem problem_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("problem document: parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw IoError("problem document: not an object");
  require_keys(doc, {"format", "domain", "utilities"}, "document root");
  if (!doc["format"].is_number_integer() || doc["format"].get<int>() != 1) {
    throw IoError("problem document: unsupported format version");
  }

  require_keys(doc["domain"], {"objectives"}, "domain");
  std::vector<int> sizes;
  for (const auto& entry : doc["domain"]["objectives"]) {
    require_keys(entry, {"size"}, "domain objective");
    sizes.push_back(entry["size"].get<int>());
  }

  NegotiationProblem problem;
  problem.domain = Domain(sizes);

  const auto& utilities = doc["utilities"];
  if (!utilities.is_array() || utilities.size() != 2) {
    throw IoError("problem document: expected exactly 2 utility functions");
  }
  for (int agent = 0; agent < 2; ++agent) {
    const auto& side = utilities[static_cast<std::size_t>(agent)];
    require_keys(side, {"objectives"}, "utility");
    const auto& objectives = side["objectives"];
    if (!objectives.is_array() || objectives.size() != sizes.size()) {
      throw IoError("problem document: utility objective count mismatch");
    }
    UtilityFunction& u = problem.utilities[agent];
    for (std::size_t b = 0; b < objectives.size(); ++b) {
      const auto& entry = objectives[b];
      require_keys(entry, {"size", "weight", "value_weights"}, "utility objective");
      if (entry["size"].get<int>() != sizes[b]) {
        throw IoError("problem document: utility size disagrees with domain");
      }
      u.objective_weights.push_back(entry["weight"].get<double>());
      u.value_weights.push_back(entry["value_weights"].get<std::vector<double>>());
    }
  }
  problem.validate();
  return problem;
}

void save_problem(const std::string& path, const NegotiationProblem& problem) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << problem_to_string(problem);
  if (!out) throw IoError("write failure: " + path);
}

NegotiationProblem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open problem file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return problem_from_string(buffer.str());
}

}  // namespace negrl
