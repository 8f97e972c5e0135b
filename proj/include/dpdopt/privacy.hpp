#pragma once

// Gaussian-mechanism calibration of the per-iteration noise n_i^k for three
// protected quantities: one data sample, the local gradient, and the
// shared iterate itself.
//
//   variance = 2 ln(1.25 / delta) S^2 / (epsilon^2 scale^2)
//
// with S the target's sensitivity and scale = lambda^k for the iterate
// target (the noise reaches x_i^k multiplied by lambda^k) and 1 otherwise.

#include <cstddef>
#include <string_view>
#include <vector>

#include "dpdopt/optimizer.hpp"

namespace dpdopt {

enum class PrivacyTarget { kSample, kGradient, kVariable };

std::string_view privacy_target_name(PrivacyTarget t);

struct SensitivityInputs {
  double nu = 0.0;      // gradient Lipschitz constant
  double lambda = 0.0;  // stepsize at the iteration
  double n_i = 1.0;     // samples held by the agent
};

struct PrivacyBudget {
  double epsilon = 0.0;  // (0, 1)
  double delta = 0.0;    // (0, 1)
  PrivacyTarget target = PrivacyTarget::kSample;
};

// nu lambda / n_i, lambda, or 1.
double sensitivity(PrivacyTarget target, const SensitivityInputs& in);

// Smallest per-coordinate variance meeting the budget. Throws
// kInvalidConfig for epsilon or delta outside (0, 1) or bad inputs.
double variance_for_budget(const PrivacyBudget& budget, const SensitivityInputs& in);

struct EpsilonEstimate {
  double epsilon = 0.0;
  // epsilon >= 1: outside the range where the Gaussian-mechanism bound
  // holds. The value is still the algebraic inverse.
  bool out_of_range = false;
};

EpsilonEstimate budget_for_variance(double variance, PrivacyTarget target,
                                    const SensitivityInputs& in, double delta);

struct PrivacyRow {
  std::size_t k = 0;
  double lambda = 0.0;
  EpsilonEstimate sample;
  EpsilonEstimate gradient;
  EpsilonEstimate variable;
};

// Per-iteration epsilon for k = 0 .. horizon - 1 at a fixed noise variance.
// Nothing is composed across iterations.
std::vector<PrivacyRow> per_iteration_report(const StepsizeSchedule& schedule, double variance,
                                             double nu, double n_i, double delta,
                                             std::size_t horizon);

}  // namespace dpdopt
