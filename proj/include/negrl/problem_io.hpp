#pragma once

#include <string>

#include "negrl/domain.hpp"

namespace negrl {

/// Canonical text serialization of a problem (format version 1). The writer
/// is deterministic: fixed key order, 17-significant-digit numbers, so
/// write -> read -> write reproduces identical bytes.
std::string problem_to_string(const NegotiationProblem& problem);

/// Parses and validates a problem document. Throws IoError on malformed
/// documents, InvalidInputError on invariant violations.
NegotiationProblem problem_from_string(const std::string& text);

void save_problem(const std::string& path, const NegotiationProblem& problem);
NegotiationProblem load_problem(const std::string& path);

/// Canonical shortest-exact decimal for doubles used across all writers.
std::string format_double(double value);

}  // namespace negrl
