#include "dpdopt/privacy.hpp"

#include <fmt/format.h>

#include <cmath>

#include "dpdopt/error.hpp"

namespace dpdopt {

namespace {

void check_inputs(const SensitivityInputs& in) {
  if (!(in.nu > 0.0) || !(in.lambda > 0.0) || !(in.n_i > 0.0) || !std::isfinite(in.nu) ||
      !std::isfinite(in.lambda) || !std::isfinite(in.n_i))
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("sensitivity inputs must be positive (nu {}, lambda {}, n_i {})",
                            in.nu, in.lambda, in.n_i));
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::kInvalidConfig, fmt::format("delta {} outside (0, 1)", delta));
}

double variance_scale(PrivacyTarget target, const SensitivityInputs& in) {
  return target == PrivacyTarget::kVariable ? in.lambda : 1.0;
}

}  // namespace

std::string_view privacy_target_name(PrivacyTarget t) {
  switch (t) {
    case PrivacyTarget::kSample: return "sample";
    case PrivacyTarget::kGradient: return "gradient";
    case PrivacyTarget::kVariable: return "variable";
  }
  return "unknown";
}

double sensitivity(PrivacyTarget target, const SensitivityInputs& in) {
  switch (target) {
    case PrivacyTarget::kSample: return in.nu * in.lambda / in.n_i;
    case PrivacyTarget::kGradient: return in.lambda;
    case PrivacyTarget::kVariable: return 1.0;
  }
  return 0.0;
}

double variance_for_budget(const PrivacyBudget& budget, const SensitivityInputs& in) {
  if (!(budget.epsilon > 0.0 && budget.epsilon < 1.0))
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("epsilon {} outside (0, 1)", budget.epsilon));
  check_delta(budget.delta);
  check_inputs(in);
  const double s = sensitivity(budget.target, in);
  const double scale = variance_scale(budget.target, in);
  return 2.0 * std::log(1.25 / budget.delta) * s * s /
         (budget.epsilon * budget.epsilon * scale * scale);
}

EpsilonEstimate budget_for_variance(double variance, PrivacyTarget target,
                                    const SensitivityInputs& in, double delta) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw Error(ErrorCode::kInvalidConfig, fmt::format("variance {} must be positive", variance));
  check_delta(delta);
  check_inputs(in);
  const double s = sensitivity(target, in);
  const double scale = variance_scale(target, in);
  EpsilonEstimate out;
  out.epsilon = s * std::sqrt(2.0 * std::log(1.25 / delta) / variance) / scale;
  out.out_of_range = out.epsilon >= 1.0;
  return out;
}

std::vector<PrivacyRow> per_iteration_report(const StepsizeSchedule& schedule, double variance,
                                             double nu, double n_i, double delta,
                                             std::size_t horizon) {
  if (horizon < 1) throw Error(ErrorCode::kInvalidConfig, "horizon must be >= 1");
  validate_schedule(schedule);
  std::vector<PrivacyRow> rows;
  rows.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    const SensitivityInputs in{nu, stepsize(schedule, k), n_i};
    PrivacyRow row;
    row.k = k;
    row.lambda = in.lambda;
    row.sample = budget_for_variance(variance, PrivacyTarget::kSample, in, delta);
    row.gradient = budget_for_variance(variance, PrivacyTarget::kGradient, in, delta);
    row.variable = budget_for_variance(variance, PrivacyTarget::kVariable, in, delta);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dpdopt
