#pragma once

// JSON experiment configs. Unknown keys are rejected; every parsed config
// serializes back to an equivalent document.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpdopt/optimizer.hpp"

namespace dpdopt::config {

struct ProblemConfig {
  std::string name = "estimation_paper";  // estimation_paper | ica | custom_quadratic
  // ica
  std::size_t d = 4;
  std::size_t agents = 5;
  std::size_t samples_per_agent = 160;
  std::uint64_t data_seed = 0;
  // custom_quadratic
  std::vector<double> diagonal;
  std::vector<std::vector<double>> centers;

  bool operator==(const ProblemConfig&) const = default;
};

struct TopologyConfig {
  std::string kind = "builtin";  // builtin | edges | matrix
  std::string builtin = "ring_plus_chord";
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<double>> matrix;

  bool operator==(const TopologyConfig&) const = default;
};

struct OutputConfig {
  std::string trace = "trace.csv";
  std::string summary = "summary.json";

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  ProblemConfig problem;
  TopologyConfig topology;
  StepsizeSchedule schedule = StepsizeSchedule::paper_estimation();
  double variance = 0.0;
  std::size_t iterations = 3000;
  InitKind init = InitKind::kRandomBox;
  std::vector<std::vector<double>> init_points;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  Algorithm algorithm = Algorithm::kPrivate;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

struct SweepConfig {
  RunConfig base;
  std::vector<double> variances{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::size_t runs_per_cell = 100;
  std::string output = "table1.csv";

  bool operator==(const SweepConfig&) const = default;
};

struct CouplingConfig {
  RunConfig base;
  std::size_t runs = 100;
  double escape_radius = 0.5;
  std::optional<std::vector<double>> saddle;  // default: the problem's saddle
  std::string output = "coupling.json";

  bool operator==(const CouplingConfig&) const = default;
};

struct PrivacyConfig {
  StepsizeSchedule schedule = StepsizeSchedule::paper_estimation();
  double variance = 0.5;
  double delta = 0.05;
  double nu = 1.0;
  double n_i = 1.0;
  std::size_t horizon = 3000;
  std::string output = "privacy.csv";

  bool operator==(const PrivacyConfig&) const = default;
};

// Parsers take the document text; `source` names it in error messages.
// Errors are Error(kInvalidConfig) carrying a line:column or JSON path.
RunConfig parse_run_config(std::string_view text, std::string_view source = "config");
SweepConfig parse_sweep_config(std::string_view text, std::string_view source = "config");
CouplingConfig parse_coupling_config(std::string_view text, std::string_view source = "config");
PrivacyConfig parse_privacy_config(std::string_view text, std::string_view source = "config");

std::string serialize(const RunConfig& c);
std::string serialize(const SweepConfig& c);
std::string serialize(const CouplingConfig& c);
std::string serialize(const PrivacyConfig& c);

// Hex digest of the canonical serialization.
std::string fingerprint(std::string_view canonical);

std::string read_file(const std::string& path);

std::shared_ptr<const Problem> build_problem(const ProblemConfig& c);
std::shared_ptr<const WeightMatrix> build_weights(const TopologyConfig& c, std::size_t agents);
// Problem, weights and run parameters; `stream` separates repeated runs.
RunSpec build_run_spec(const RunConfig& c, std::uint64_t stream = 0);

}  // namespace dpdopt::config
