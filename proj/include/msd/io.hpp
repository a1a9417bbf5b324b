#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"

#include "msd/analysis.hpp"
#include "msd/channel.hpp"
#include "msd/errors.hpp"
#include "msd/lti.hpp"
#include "msd/synthesis.hpp"

namespace msd {

/// Malformed configuration. what() names the source and either the line
/// and column of a syntax error or the JSON path of the offending field.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct ProblemConfig {
  StateSpace plant;
  std::optional<StateSpace> controller;
  ChannelSpec channel{{1.0}, {1.0}};
  std::optional<double> sigma_v_sq;
  std::optional<Matrix> initial_covariance;
  std::optional<std::uint64_t> seed;
};

/// Schema:
///   plant:      {"state_space": {A, B, C, D}} or {"transfer_function": {num, den}}
///   controller: optional, same forms
///   channel:    {"pmf": [...], "weights": [...]}
///   input:      {"sigma_v_sq": s} and/or {"initial_covariance": [[...]]}
///   seed:       optional nonnegative integer
ProblemConfig parse_config(const std::string& text, const std::string& source = "<config>");
ProblemConfig load_config(const std::string& path);

/// Reads a system object ({"state_space": ...} or {"transfer_function": ...}).
StateSpace parse_system(const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const Matrix& M);
nlohmann::json to_json(const Polynomial& p);
nlohmann::json to_json(const StateSpace& ss);
nlohmann::json to_json(const RationalTF& tf);
nlohmann::json to_json(const AnalysisReport& r);
nlohmann::json to_json(const SynthesisResult& r);

/// Value rounded to 4 decimals, as printed in reports.
double round4(double x);

/// k, sigma_sq
void write_trace_csv(std::ostream& os, const VarianceTrace& t);

}  // namespace msd
