#include "dpdopt/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpdopt/error.hpp"
#include "dpdopt/kernels.hpp"
#include "dpdopt/parallel.hpp"

namespace dpdopt {

namespace {

constexpr double kSaddleGradTol = 1e-2;
constexpr double kSaddleEigTol = 1e-6;

double deviation_norm(std::span<const double> x, std::size_t m, std::size_t d) {
  std::vector<double> mean(d);
  return std::sqrt(kernels::deviation_sq(x, m, mean));
}

double distance_to_minimum(const Problem& p, const AgentState& s) {
  const auto target = p.reference_minimum();
  if (!target) return std::numeric_limits<double>::quiet_NaN();
  return (s.mean() - *target).norm();
}

}  // namespace

double consensus_error(const AgentState& state) {
  return deviation_norm(state.x, state.agents, state.dim);
}

ContractionReport assert_contraction(const RunTrace& trace, const WeightMatrix& w,
                                     double slack) {
  const std::size_t m = w.agents();
  const double eta = w.eta();
  ContractionReport report;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r + 1 < trace.rows.size(); ++r) {
    const TraceRow& before = trace.rows[r];
    const TraceRow& after = trace.rows[r + 1];
    if (after.k != before.k + 1) continue;
    if (before.agent_x.empty() || after.agent_x.empty())
      throw Error(ErrorCode::kMissingPerAgentData,
                  fmt::format("trace rows at k = {} and {} carry no agent states", before.k,
                              after.k));
    if (before.agent_x.size() % m != 0)
      throw Error(ErrorCode::kDimensionMismatch, "agent state size vs weight matrix");
    const std::size_t d = before.agent_x.size() / m;
    const double lhs = deviation_norm(after.agent_x, m, d);
    const double rhs = eta * deviation_norm(before.agent_x, m, d) +
                       eta * after.lambda * after.drive_norm + slack;
    ++report.checked;
    report.worst_margin = std::max(report.worst_margin, lhs - rhs);
    if (lhs > rhs) {
      if (!report.first_violation_k) report.first_violation_k = after.k;
      ++report.violations;
    }
  }
  if (report.checked == 0) report.worst_margin = 0.0;
  return report;
}

Eigen::VectorXd min_curvature_direction(const Problem& p, const Eigen::VectorXd& theta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(aggregated_hessian(p, theta));
  Eigen::VectorXd v = eig.eigenvectors().col(0).normalized();
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    if (v(c) != 0.0) {
      if (v(c) < 0.0) v = -v;
      break;
    }
  }
  return v;
}

CouplingResult run_coupling_experiment(const Problem& p, const WeightMatrix& w,
                                       const Eigen::VectorXd& saddle,
                                       const CouplingOptions& options) {
  if (p.on_unit_sphere())
    throw Error(ErrorCode::kInvalidConfig, "coupling runs need an unconstrained problem");
  if (!(options.variance >= 0.0))
    throw Error(ErrorCode::kInvalidConfig, "coupling variance must be >= 0");
  if (options.horizon < 1 || options.runs < 1)
    throw Error(ErrorCode::kInvalidConfig, "coupling needs runs >= 1 and horizon >= 1");
  if (!(options.escape_radius > 0.0))
    throw Error(ErrorCode::kInvalidConfig, "escape radius must be positive");
  validate_schedule(options.schedule);
  const PointKind kind = classify_stationary_point(p, saddle, kSaddleGradTol, kSaddleEigTol);
  if (kind != PointKind::kStrictSaddle)
    throw Error(ErrorCode::kNotAStrictSaddle,
                fmt::format("point classified as {}", point_kind_name(kind)));

  const std::size_t m = p.agents();
  const std::size_t d = p.dim();
  CouplingResult result;
  result.total_runs = options.runs;
  result.escape_radius = options.escape_radius;
  result.saddle = saddle;
  result.e1 = min_curvature_direction(p, saddle);
  result.min_eigenvalue = feasible_hessian_eigenvalues(p, saddle)(0);
  result.runs.resize(options.runs);
  const Eigen::VectorXd e1 = result.e1;

  parallel_for(options.runs, options.jobs, [&](std::size_t r) {
    AgentState primary(m, d);
    for (std::size_t i = 0; i < m; ++i)
      std::copy(saddle.data(), saddle.data() + d, primary.row(i).begin());
    AgentState mirrored = primary;
    NoiseSource source(NoiseSpec{options.variance, options.seed}, m, d, r);
    std::vector<double> noise(m * d);
    std::vector<double> flipped(m * d);
    CouplingRun& out = result.runs[r];
    const bool record = options.record_noise && r == 0;

    for (std::size_t it = 0; it < options.horizon; ++it) {
      const double lambda = stepsize(options.schedule, primary.k);
      source.draw(noise);
      for (std::size_t i = 0; i < m; ++i) {
        double along = 0.0;
        for (std::size_t c = 0; c < d; ++c) along += e1(c) * noise[i * d + c];
        for (std::size_t c = 0; c < d; ++c)
          flipped[i * d + c] = noise[i * d + c] - 2.0 * along * e1(c);
      }
      if (record) {
        result.primary_noise.insert(result.primary_noise.end(), noise.begin(), noise.end());
        result.mirrored_noise.insert(result.mirrored_noise.end(), flipped.begin(),
                                     flipped.end());
      }
      const bool noisy = source.enabled();
      step_with_noise(primary, w, p, lambda, noisy ? std::span<const double>(noise)
                                                   : std::span<const double>());
      step_with_noise(mirrored, w, p, lambda, noisy ? std::span<const double>(flipped)
                                                    : std::span<const double>());
      if (!out.escape_iteration) {
        const double a = (primary.mean() - saddle).norm();
        const double b = (mirrored.mean() - saddle).norm();
        if (a > options.escape_radius || b > options.escape_radius)
          out.escape_iteration = primary.k;
      }
    }
    out.final_distance_primary = distance_to_minimum(p, primary);
    out.final_distance_mirrored = distance_to_minimum(p, mirrored);
  });

  for (const auto& run : result.runs)
    if (run.escape_iteration) ++result.escape_count;
  return result;
}

std::vector<EscapeCell> escape_iterations_vs_stepsize(
    const Problem& p, const WeightMatrix& w, const Eigen::VectorXd& saddle,
    const std::vector<double>& variances, const std::vector<double>& stepsizes,
    std::size_t runs, std::size_t horizon, double escape_radius, std::uint64_t seed,
    std::size_t jobs) {
  std::vector<EscapeCell> cells;
  for (double variance : variances) {
    for (double lambda : stepsizes) {
      CouplingOptions options;
      options.schedule = StepsizeSchedule::constant(lambda);
      options.variance = variance;
      options.runs = runs;
      options.horizon = horizon;
      options.escape_radius = escape_radius;
      options.seed = seed;
      options.jobs = jobs;
      const CouplingResult result = run_coupling_experiment(p, w, saddle, options);

      EscapeCell cell;
      cell.variance = variance;
      cell.stepsize = lambda;
      cell.runs = runs;
      cell.escaped = result.escape_count;
      std::vector<double> times;
      for (const auto& run : result.runs)
        times.push_back(run.escape_iteration ? static_cast<double>(*run.escape_iteration)
                                             : std::numeric_limits<double>::infinity());
      std::sort(times.begin(), times.end());
      const double median = times.size() % 2 == 1
                                ? times[times.size() / 2]
                                : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
      if (std::isfinite(median)) cell.median_escape = median;
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace dpdopt
