#pragma once

// Metrics over agent states, the one-step disagreement bound, and the
// coupled-trajectory saddle escape experiment.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dpdopt/optimizer.hpp"
#include "dpdopt/problems.hpp"
#include "dpdopt/topology.hpp"

namespace dpdopt {

// ||x - 1 (x) mean||.
double consensus_error(const AgentState& state);

struct ContractionReport {
  std::size_t checked = 0;     // consecutive-k row pairs examined
  std::size_t violations = 0;
  std::optional<std::size_t> first_violation_k;  // k of the later row
  double worst_margin = 0.0;   // max of lhs - rhs over checked pairs
};

// For every pair of rows with consecutive k, checks
//   ||x^{k+1} - 1 (x) mean^{k+1}|| <= eta ||x^k - 1 (x) mean^k||
//                                    + eta lambda^k ||g^k + N^k|| + slack,
// taking lambda and drive_norm from the later row. Throws
// kMissingPerAgentData if a row lacks agent states.
ContractionReport assert_contraction(const RunTrace& trace, const WeightMatrix& w,
                                     double slack = 1e-9);

// Unit eigenvector of the smallest Hessian eigenvalue at theta, sign fixed
// so the first nonzero component is positive.
Eigen::VectorXd min_curvature_direction(const Problem& p, const Eigen::VectorXd& theta);

struct CouplingOptions {
  StepsizeSchedule schedule;
  double variance = 0.0;
  std::size_t runs = 0;
  std::size_t horizon = 0;
  double escape_radius = 0.5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  // Keep both noise sequences of run 0 (for pairing checks).
  bool record_noise = false;
};

struct CouplingRun {
  // First k at which either trajectory's mean iterate is farther than the
  // escape radius from the saddle.
  std::optional<std::size_t> escape_iteration;
  // Mean iterate distance to the reference minimum at the horizon, for each
  // trajectory (NaN when the problem has none).
  double final_distance_primary = 0.0;
  double final_distance_mirrored = 0.0;
};

struct CouplingResult {
  std::size_t escape_count = 0;
  std::size_t total_runs = 0;
  double escape_radius = 0.0;
  Eigen::VectorXd saddle;
  Eigen::VectorXd e1;
  double min_eigenvalue = 0.0;
  std::vector<CouplingRun> runs;
  // With record_noise: horizon blocks of m*d values per trajectory.
  std::vector<double> primary_noise;
  std::vector<double> mirrored_noise;
};

// Each run starts every agent at `saddle` and advances two trajectories.
// Both see the same per-agent draws except that each agent's component
// along e1 is negated in the second. Throws kNotAStrictSaddle.
CouplingResult run_coupling_experiment(const Problem& p, const WeightMatrix& w,
                                       const Eigen::VectorXd& saddle,
                                       const CouplingOptions& options);

struct EscapeCell {
  double variance = 0.0;
  double stepsize = 0.0;
  std::size_t escaped = 0;
  std::size_t runs = 0;
  // Median over runs, censored runs counted as never escaping; empty when
  // at least half the runs are censored.
  std::optional<double> median_escape;
};

// Constant-stepsize coupling runs over a variance x stepsize grid.
std::vector<EscapeCell> escape_iterations_vs_stepsize(
    const Problem& p, const WeightMatrix& w, const Eigen::VectorXd& saddle,
    const std::vector<double>& variances, const std::vector<double>& stepsizes,
    std::size_t runs, std::size_t horizon, double escape_radius, std::uint64_t seed,
    std::size_t jobs = 1);

}  // namespace dpdopt
