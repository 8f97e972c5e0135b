#include "dpdopt/optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpdopt/error.hpp"
#include "dpdopt/kernels.hpp"

namespace dpdopt {

namespace {

constexpr std::uint32_t kNoiseSalt = 0x6e6f6973;
constexpr std::uint32_t kInitSalt = 0x696e6974;

std::uint32_t low(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t high(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

void check_shapes(const AgentState& state, const WeightMatrix& w, const Problem& p) {
  if (w.agents() != state.agents || p.agents() != state.agents || p.dim() != state.dim ||
      state.x.size() != state.agents * state.dim)
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("state {}x{}, weights for {} agents, problem {} agents of dim {}",
                            state.agents, state.dim, w.agents(), p.agents(), p.dim()));
}

}  // namespace

StepsizeSchedule StepsizeSchedule::constant(double lambda0) {
  return {ScheduleKind::kConstant, lambda0, 0, 0.0};
}

StepsizeSchedule StepsizeSchedule::harmonic(double scale) {
  return {ScheduleKind::kHarmonic, 0.0, 0, scale};
}

StepsizeSchedule StepsizeSchedule::piecewise(double lambda0, std::size_t switch_k, double scale) {
  return {ScheduleKind::kPiecewisePaper, lambda0, switch_k, scale};
}

StepsizeSchedule StepsizeSchedule::paper_estimation() { return piecewise(0.02, 500, 1.0); }

StepsizeSchedule StepsizeSchedule::paper_ica() { return piecewise(0.003, 100, 0.3); }

std::string_view schedule_kind_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kHarmonic: return "harmonic";
    case ScheduleKind::kPiecewisePaper: return "piecewise_paper";
  }
  return "unknown";
}

void validate_schedule(const StepsizeSchedule& s) {
  switch (s.kind) {
    case ScheduleKind::kConstant:
      if (!(s.lambda0 > 0.0) || !std::isfinite(s.lambda0))
        throw Error(ErrorCode::kInvalidConfig, "constant schedule needs lambda0 > 0");
      return;
    case ScheduleKind::kHarmonic:
      if (!(s.scale > 0.0) || !std::isfinite(s.scale))
        throw Error(ErrorCode::kInvalidConfig, "harmonic schedule needs scale > 0");
      return;
    case ScheduleKind::kPiecewisePaper:
      if (!(s.lambda0 > 0.0) || !(s.scale > 0.0) || !std::isfinite(s.lambda0) ||
          !std::isfinite(s.scale))
        throw Error(ErrorCode::kInvalidConfig, "piecewise schedule needs lambda0, scale > 0");
      // The first tail value scale/(switch_k + 1) must not exceed lambda0.
      if (s.scale / static_cast<double>(s.switch_k + 1) > s.lambda0)
        throw Error(ErrorCode::kInvalidConfig,
                    fmt::format("piecewise schedule increases at the switch: {} / {} > {}",
                                s.scale, s.switch_k + 1, s.lambda0));
      return;
  }
}

double stepsize(const StepsizeSchedule& s, std::size_t k) {
  switch (s.kind) {
    case ScheduleKind::kConstant: return s.lambda0;
    case ScheduleKind::kHarmonic: return s.scale / static_cast<double>(std::max<std::size_t>(k, 1));
    case ScheduleKind::kPiecewisePaper:
      return k <= s.switch_k ? s.lambda0 : s.scale / static_cast<double>(k);
  }
  return 0.0;
}

NoiseSource::NoiseSource(const NoiseSpec& spec, std::size_t agents, std::size_t dim,
                         std::uint64_t stream)
    : variance_(spec.variance), dim_(dim) {
  if (!(spec.variance >= 0.0) || !std::isfinite(spec.variance))
    throw Error(ErrorCode::kInvalidConfig, fmt::format("noise variance {} < 0", spec.variance));
  const double sd = std::sqrt(spec.variance);
  for (std::size_t j = 0; j < agents; ++j) {
    std::seed_seq seq{low(spec.seed), high(spec.seed), low(stream), high(stream),
                      static_cast<std::uint32_t>(j), kNoiseSalt};
    engines_.emplace_back(seq);
    normals_.emplace_back(0.0, sd);
  }
}

void NoiseSource::draw(std::span<double> out) {
  if (!enabled()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (std::size_t j = 0; j < engines_.size(); ++j)
    for (std::size_t c = 0; c < dim_; ++c) out[j * dim_ + c] = normals_[j](engines_[j]);
}

Eigen::VectorXd AgentState::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < agents; ++i)
    for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(c)) += x[i * dim + c];
  return m / static_cast<double>(agents);
}

std::string_view algorithm_name(Algorithm a) {
  return a == Algorithm::kPrivate ? "private" : "conventional_dgd";
}

StepReport step_with_noise(AgentState& state, const WeightMatrix& w, const Problem& p,
                           double lambda, std::span<const double> noise, Algorithm algorithm) {
  check_shapes(state, w, p);
  const std::size_t m = state.agents;
  const std::size_t d = state.dim;
  const std::size_t n = m * d;
  if (!noise.empty() && noise.size() != n)
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("noise has {} values, state has {}", noise.size(), n));

  thread_local std::vector<double> grad;
  thread_local std::vector<double> buffer;
  grad.resize(n);
  buffer.resize(n);
  for (std::size_t i = 0; i < m; ++i) p.gradient(i, state.row(i), {grad.data() + i * d, d});

  StepReport report;
  report.lambda = lambda;
  double drive_sq = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    const double v = grad[e] + (noise.empty() ? 0.0 : noise[e]);
    drive_sq += v * v;
  }
  report.drive_norm = std::sqrt(drive_sq);
  report.noise_norm = noise.empty() ? 0.0 : norm(noise);

  if (algorithm == Algorithm::kPrivate) {
    kernels::descent_message(state.x, grad, noise, lambda, buffer);
    apply_mixing(w, buffer, state.x);
  } else {
    apply_mixing(w, state.x, buffer);
    kernels::descent_message(buffer, grad, noise, lambda, state.x);
  }
  if (p.on_unit_sphere())
    for (std::size_t i = 0; i < m; ++i) p.project(state.row(i));

  ++state.k;
  for (std::size_t e = 0; e < n; ++e)
    if (!std::isfinite(state.x[e]))
      throw Error(ErrorCode::kNonFiniteState,
                  fmt::format("agent {} coordinate {} at iteration {}", e / d, e % d, state.k));
  return report;
}

StepReport step(AgentState& state, const WeightMatrix& w, const Problem& p,
                const StepsizeSchedule& s, NoiseSource& source, Algorithm algorithm) {
  thread_local std::vector<double> noise;
  const double lambda = stepsize(s, state.k);
  if (!source.enabled()) return step_with_noise(state, w, p, lambda, {}, algorithm);
  noise.resize(state.agents * state.dim);
  source.draw(noise);
  return step_with_noise(state, w, p, lambda, noise, algorithm);
}

std::string_view init_kind_name(InitKind kind) {
  switch (kind) {
    case InitKind::kRandomBox: return "random_box";
    case InitKind::kExplicit: return "explicit";
    case InitKind::kAtSaddle: return "at_saddle";
  }
  return "unknown";
}

AgentState initial_state(const RunSpec& spec) {
  if (!spec.problem || !spec.weights)
    throw Error(ErrorCode::kInvalidConfig, "run needs a problem and a weight matrix");
  const Problem& p = *spec.problem;
  const std::size_t m = p.agents();
  const std::size_t d = p.dim();
  if (spec.weights->agents() != m)
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("topology has {} agents, problem has {}", spec.weights->agents(), m));
  AgentState state(m, d);

  switch (spec.init.kind) {
    case InitKind::kRandomBox: {
      std::seed_seq seq{low(spec.noise.seed), high(spec.noise.seed), low(spec.stream),
                        high(spec.stream), kInitSalt};
      std::mt19937_64 rng(seq);
      for (std::size_t i = 0; i < m; ++i) p.sample_initial(rng, state.row(i));
      break;
    }
    case InitKind::kExplicit: {
      const auto& pts = spec.init.points;
      if (pts.size() != 1 && pts.size() != m)
        throw Error(ErrorCode::kInvalidConfig,
                    fmt::format("explicit init needs 1 or {} points, got {}", m, pts.size()));
      for (std::size_t i = 0; i < m; ++i) {
        const auto& pt = pts.size() == 1 ? pts[0] : pts[i];
        if (pt.size() != d)
          throw Error(ErrorCode::kDimensionMismatch,
                      fmt::format("init point has {} coordinates, problem dimension is {}",
                                  pt.size(), d));
        std::copy(pt.begin(), pt.end(), state.row(i).begin());
      }
      break;
    }
    case InitKind::kAtSaddle: {
      const auto saddle = p.reference_saddle();
      if (!saddle)
        throw Error(ErrorCode::kInvalidConfig,
                    fmt::format("problem '{}' has no known saddle", p.name()));
      for (std::size_t i = 0; i < m; ++i)
        std::copy(saddle->data(), saddle->data() + d, state.row(i).begin());
      break;
    }
  }
  if (p.on_unit_sphere())
    for (std::size_t i = 0; i < m; ++i) p.project(state.row(i));
  for (double v : state.x)
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidConfig, "non-finite initial state");
  return state;
}

TraceRow measure(const AgentState& state, const Problem& p, bool keep_agent_states) {
  TraceRow row;
  row.k = state.k;
  thread_local std::vector<double> mean;
  mean.resize(state.dim);
  row.consensus_error = std::sqrt(kernels::deviation_sq(state.x, state.agents, mean));
  if (p.has_optimization_error()) {
    double total = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < state.agents; ++i) {
      const double e = p.optimization_error(state.row(i));
      total += e;
      worst = std::max(worst, e);
    }
    row.opt_error_mean = total / static_cast<double>(state.agents);
    row.opt_error_max = worst;
  } else {
    row.opt_error_mean = std::numeric_limits<double>::quiet_NaN();
    row.opt_error_max = std::numeric_limits<double>::quiet_NaN();
  }
  Eigen::VectorXd centre = state.mean();
  if (p.on_unit_sphere()) p.project({centre.data(), state.dim});
  row.grad_norm_mean = aggregated_gradient(p, centre).norm();
  if (keep_agent_states) row.agent_x = state.x;
  return row;
}

RunTrace run(const RunSpec& spec) {
  if (spec.iterations < 1) throw Error(ErrorCode::kInvalidConfig, "iterations must be >= 1");
  if (spec.record_every < 1) throw Error(ErrorCode::kInvalidConfig, "record_every must be >= 1");
  validate_schedule(spec.schedule);
  AgentState state = initial_state(spec);
  const Problem& p = *spec.problem;
  NoiseSource source(spec.noise, state.agents, state.dim, spec.stream);

  RunTrace trace;
  trace.seed = spec.noise.seed;
  trace.rows.push_back(measure(state, p, spec.keep_agent_states));
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    const StepReport report = step(state, *spec.weights, p, spec.schedule, source, spec.algorithm);
    if (state.k % spec.record_every == 0 || state.k == spec.iterations) {
      TraceRow row = measure(state, p, spec.keep_agent_states);
      row.lambda = report.lambda;
      row.noise_norm = report.noise_norm;
      row.drive_norm = report.drive_norm;
      trace.rows.push_back(std::move(row));
    }
  }
  trace.final_state = std::move(state);
  return trace;
}

RunTrace run_conventional_dgd(RunSpec spec) {
  spec.algorithm = Algorithm::kConventional;
  return run(spec);
}

}  // namespace dpdopt
