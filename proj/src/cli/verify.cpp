#include <fmt/format.h>

#include <cmath>
#include <random>

#include "dpdopt/analysis.hpp"
#include "dpdopt/commands.hpp"
#include "dpdopt/error.hpp"
#include "dpdopt/privacy.hpp"
#include "dpdopt/problems.hpp"
#include "dpdopt/topology.hpp"

namespace dpdopt::cli {

namespace {

VerifyCheck check(std::string name, const std::function<std::string()>& body) {
  VerifyCheck c;
  c.name = std::move(name);
  try {
    c.detail = body();
    c.passed = true;
  } catch (const std::exception& e) {
    c.detail = e.what();
  }
  return c;
}

[[noreturn]] void failure(const std::string& what) { throw std::runtime_error(what); }

// Largest relative gap between the gradient and central differences of the
// objective, restricted to the tangent space on the sphere.
double gradient_gap(const Problem& p, std::mt19937_64& rng, int points) {
  const double h = 1e-6;
  double worst = 0.0;
  for (int t = 0; t < points; ++t) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(p.dim()));
    p.sample_initial(rng, {x.data(), p.dim()});
    for (std::size_t i = 0; i < p.agents(); ++i) {
      const Eigen::VectorXd g = agent_gradient(p, i, x);
      Eigen::VectorXd fd(x.size());
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        Eigen::VectorXd a = x, b = x;
        a(c) += h;
        b(c) -= h;
        fd(c) = (p.objective(i, {a.data(), p.dim()}) - p.objective(i, {b.data(), p.dim()})) /
                (2.0 * h);
      }
      if (p.on_unit_sphere()) fd -= x.dot(fd) * x;
      worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
    }
  }
  return worst;
}

}  // namespace

std::vector<VerifyCheck> run_verify_suite() {
  std::vector<VerifyCheck> checks;
  auto estimation = make_paper_estimation_problem();

  checks.push_back(check("weight matrices (builtin, m = 1..20)", [] {
    std::size_t built = 0;
    for (const char* name : {"complete", "ring", "path", "ring_plus_chord"}) {
      for (std::size_t m = 1; m <= 20; ++m) {
        const WeightMatrix w = build_metropolis_weights(builtin_topology(name, m));
        const WeightMatrix again = validate_weight_matrix(w.matrix());
        if (!(w.eta() < 1.0) || again.eta() != w.eta())
          failure(fmt::format("{} m={} eta={}", name, m, w.eta()));
        ++built;
      }
    }
    return fmt::format("{} matrices valid", built);
  }));

  checks.push_back(check("gradient vs finite differences", [&] {
    std::mt19937_64 rng(11);
    const double est = gradient_gap(*estimation, rng, 20);
    auto ica = make_ica_problem(4, 5, 40, 3);
    const double ica_gap = gradient_gap(*ica, rng, 20);
    if (est > 1e-5 || ica_gap > 1e-5)
      failure(fmt::format("relative gap estimation {:.2e}, ica {:.2e}", est, ica_gap));
    return fmt::format("max relative gap {:.1e}", std::max(est, ica_gap));
  }));

  checks.push_back(check("contraction on a short run", [&] {
    RunSpec spec;
    spec.problem = estimation;
    spec.weights = std::make_shared<const WeightMatrix>(
        build_metropolis_weights(builtin_topology("ring_plus_chord", 5)));
    spec.schedule = StepsizeSchedule::paper_estimation();
    spec.noise = NoiseSpec{0.5, 17};
    spec.iterations = 200;
    spec.keep_agent_states = true;
    const ContractionReport r = assert_contraction(run(spec), *spec.weights);
    if (r.violations > 0) failure(fmt::format("first violation at k = {}", *r.first_violation_k));
    return fmt::format("{} steps checked", r.checked);
  }));

  checks.push_back(check("privacy round trips", [] {
    double worst = 0.0;
    for (PrivacyTarget t : {PrivacyTarget::kSample, PrivacyTarget::kGradient,
                            PrivacyTarget::kVariable}) {
      for (double eps : {0.05, 0.3, 0.5, 0.9}) {
        for (double lambda : {1e-3, 0.02, 0.5}) {
          const SensitivityInputs in{8.0, lambda, 160.0};
          const double v = variance_for_budget({eps, 0.05, t}, in);
          worst = std::max(worst, std::abs(budget_for_variance(v, t, in, 0.05).epsilon - eps));
        }
      }
    }
    if (worst > 1e-12) failure(fmt::format("round-trip error {:.2e}", worst));
    return fmt::format("max error {:.1e}", worst);
  }));

  struct Printed {
    const char* label;
    double a, b;
    PointKind expected;
  };
  for (const Printed& pt : {Printed{"(1.3478, 1.0690)", 1.3478, 1.0690, PointKind::kMinimum},
                            Printed{"(-7.4336, 1.3959)", -7.4336, 1.3959,
                                    PointKind::kStrictSaddle}}) {
    checks.push_back(check(fmt::format("classify {}", pt.label), [&] {
      const PointKind kind =
          classify_stationary_point(*estimation, Eigen::Vector2d(pt.a, pt.b), 1e-2, 1e-6);
      if (kind != pt.expected)
        failure(fmt::format("got {}, expected {}", point_kind_name(kind),
                            point_kind_name(pt.expected)));
      return std::string(point_kind_name(kind));
    }));
  }
  return checks;
}

}  // namespace dpdopt::cli
