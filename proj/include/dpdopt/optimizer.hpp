#pragma once

// Decentralized gradient iterations over a mixing matrix:
//   private:      x^{k+1} = (W (x) I_d)(x^k - lambda^k (g^k + N^k))
//   conventional: x^{k+1} = (W (x) I_d) x^k - lambda^k (g^k + N^k)
// N^k = 0 when the noise variance is 0.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpdopt/problems.hpp"
#include "dpdopt/topology.hpp"

namespace dpdopt {

enum class ScheduleKind { kConstant, kHarmonic, kPiecewisePaper };

// lambda^k for k = 0, 1, ...:
//   constant:        lambda0
//   harmonic:        scale / max(k, 1)
//   piecewise_paper: lambda0 for k <= switch_k, scale / k afterwards
struct StepsizeSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double lambda0 = 0.0;
  std::size_t switch_k = 0;
  double scale = 0.0;

  static StepsizeSchedule constant(double lambda0);
  static StepsizeSchedule harmonic(double scale);
  static StepsizeSchedule piecewise(double lambda0, std::size_t switch_k, double scale);
  // 0.02 up to k = 500, then 1/k.
  static StepsizeSchedule paper_estimation();
  // 0.003 up to k = 100, then 0.3/k.
  static StepsizeSchedule paper_ica();

  bool operator==(const StepsizeSchedule&) const = default;
};

std::string_view schedule_kind_name(ScheduleKind kind);

// Throws kInvalidConfig unless every lambda^k is positive and the sequence
// is non-increasing.
void validate_schedule(const StepsizeSchedule& s);

double stepsize(const StepsizeSchedule& s, std::size_t k);

struct NoiseSpec {
  double variance = 0.0;  // per coordinate
  std::uint64_t seed = 0;
};

// Gaussian noise with one generator per agent, seeded from
// (seed, stream, agent). Agent j's draws at iteration k depend only on
// those three values and k.
class NoiseSource {
 public:
  NoiseSource(const NoiseSpec& spec, std::size_t agents, std::size_t dim,
              std::uint64_t stream = 0);

  double variance() const { return variance_; }
  bool enabled() const { return variance_ > 0.0; }
  // Fills m*d row-major values (zeros when disabled).
  void draw(std::span<double> out);

 private:
  double variance_;
  std::size_t dim_;
  std::vector<std::mt19937_64> engines_;
  std::vector<std::normal_distribution<double>> normals_;
};

// Stacked agent iterates, m rows of d.
struct AgentState {
  std::size_t agents = 0;
  std::size_t dim = 0;
  std::size_t k = 0;
  std::vector<double> x;

  AgentState() = default;
  AgentState(std::size_t agents, std::size_t dim) : agents(agents), dim(dim), x(agents * dim) {}

  std::span<double> row(std::size_t i) { return {x.data() + i * dim, dim}; }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  Eigen::VectorXd mean() const;
};

enum class Algorithm { kPrivate, kConventional };

std::string_view algorithm_name(Algorithm a);

struct StepReport {
  double lambda = 0.0;
  double noise_norm = 0.0;  // ||N^k||
  double drive_norm = 0.0;  // ||g^k + N^k||
};

// One iteration with caller-supplied noise (empty span = no noise).
// Sphere-constrained problems renormalize each agent afterwards. Throws
// kNonFiniteState naming the iteration when an entry stops being finite.
StepReport step_with_noise(AgentState& state, const WeightMatrix& w, const Problem& p,
                           double lambda, std::span<const double> noise,
                           Algorithm algorithm = Algorithm::kPrivate);

// One iteration at lambda^{state.k} with noise from `source`.
StepReport step(AgentState& state, const WeightMatrix& w, const Problem& p,
                const StepsizeSchedule& s, NoiseSource& source,
                Algorithm algorithm = Algorithm::kPrivate);

enum class InitKind { kRandomBox, kExplicit, kAtSaddle };

std::string_view init_kind_name(InitKind kind);

struct InitSpec {
  InitKind kind = InitKind::kRandomBox;
  // kExplicit: one point shared by all agents, or one per agent.
  std::vector<std::vector<double>> points;
};

struct RunSpec {
  std::shared_ptr<const Problem> problem;
  std::shared_ptr<const WeightMatrix> weights;
  StepsizeSchedule schedule;
  NoiseSpec noise;
  std::size_t iterations = 0;
  InitSpec init;
  std::size_t record_every = 1;
  bool keep_agent_states = false;
  Algorithm algorithm = Algorithm::kPrivate;
  // Separates repeated runs sharing a seed (sweeps, coupling pairs).
  std::uint64_t stream = 0;
};

// Row k describes x^k; lambda, noise_norm and drive_norm belong to the step
// that produced it (all 0 in row 0).
struct TraceRow {
  std::size_t k = 0;
  double lambda = 0.0;
  double consensus_error = 0.0;
  double opt_error_mean = 0.0;
  double opt_error_max = 0.0;
  double noise_norm = 0.0;
  double drive_norm = 0.0;
  double grad_norm_mean = 0.0;  // ||grad F(mean iterate)||
  std::vector<double> agent_x;  // only with keep_agent_states
};

struct RunTrace {
  std::vector<TraceRow> rows;
  AgentState final_state;
  std::uint64_t seed = 0;
  std::string fingerprint;
};

AgentState initial_state(const RunSpec& spec);

// Rows at k = 0, every record_every iterations and the last iteration.
RunTrace run(const RunSpec& spec);
// Same with Algorithm::kConventional.
RunTrace run_conventional_dgd(RunSpec spec);

TraceRow measure(const AgentState& state, const Problem& p, bool keep_agent_states);

}  // namespace dpdopt
