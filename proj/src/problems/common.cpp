#include <fmt/format.h>

#include <cmath>

#include "dpdopt/error.hpp"
#include "dpdopt/problems.hpp"

namespace dpdopt {

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Orthonormal basis of the complement of unit vector u (d x (d-1)).
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& u) {
  const auto d = u.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return q.rightCols(d - 1);
}

Eigen::MatrixXd finite_difference_hessian(const Problem& p, const Eigen::VectorXd& theta,
                                          double step) {
  const auto d = theta.size();
  Eigen::MatrixXd jac(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::VectorXd plus = theta;
    Eigen::VectorXd minus = theta;
    plus(c) += step;
    minus(c) -= step;
    jac.col(c) = (aggregated_gradient(p, plus) - aggregated_gradient(p, minus)) / (2.0 * step);
  }
  if (p.on_unit_sphere()) {
    const Eigen::MatrixXd proj =
        Eigen::MatrixXd::Identity(d, d) - theta * theta.transpose() / theta.squaredNorm();
    jac = proj * jac * proj;
  }
  return 0.5 * (jac + jac.transpose());
}

}  // namespace

std::string_view point_kind_name(PointKind kind) {
  switch (kind) {
    case PointKind::kMinimum: return "minimum";
    case PointKind::kMaximum: return "maximum";
    case PointKind::kStrictSaddle: return "strict_saddle";
    case PointKind::kDegenerate: return "degenerate";
    case PointKind::kNotStationary: return "not_stationary";
  }
  return "unknown";
}

std::optional<Eigen::MatrixXd> Problem::analytic_hessian(std::size_t,
                                                         std::span<const double>) const {
  return std::nullopt;
}

void Problem::sample_initial(std::mt19937_64& rng, std::span<double> out) const {
  const auto box = region();
  if (!box)
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("problem '{}' has no region for random initialization", name()));
  for (std::size_t c = 0; c < out.size(); ++c) {
    std::uniform_real_distribution<double> coord(box->lo(c), box->hi(c));
    out[c] = coord(rng);
  }
}

double Problem::optimization_error(std::span<const double> x) const {
  const auto target = reference_minimum();
  if (!target)
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("problem '{}' has no reference minimum", name()));
  double sq = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double diff = x[c] - (*target)(c);
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

Eigen::VectorXd agent_gradient(const Problem& p, std::size_t agent,
                               const Eigen::VectorXd& theta) {
  if (agent >= p.agents())
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("agent {} of {}", agent, p.agents()));
  if (static_cast<std::size_t>(theta.size()) != p.dim())
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("theta has {} entries, problem dimension is {}", theta.size(), p.dim()));
  Eigen::VectorXd g(theta.size());
  p.gradient(agent, view(theta), {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

Eigen::VectorXd aggregated_gradient(const Problem& p, const Eigen::VectorXd& theta) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(theta.size());
  for (std::size_t i = 0; i < p.agents(); ++i) sum += agent_gradient(p, i, theta);
  return sum / static_cast<double>(p.agents());
}

double aggregated_objective(const Problem& p, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != p.dim())
    throw Error(ErrorCode::kDimensionMismatch, "theta length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.agents(); ++i) sum += p.objective(i, view(theta));
  return sum / static_cast<double>(p.agents());
}

Eigen::MatrixXd aggregated_hessian(const Problem& p, const Eigen::VectorXd& theta,
                                   HessianMode mode, double step) {
  if (static_cast<std::size_t>(theta.size()) != p.dim())
    throw Error(ErrorCode::kDimensionMismatch, "theta length");
  if (mode == HessianMode::kFiniteDifference) return finite_difference_hessian(p, theta, step);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(theta.size(), theta.size());
  for (std::size_t i = 0; i < p.agents(); ++i) {
    auto h = p.analytic_hessian(i, view(theta));
    if (!h) return finite_difference_hessian(p, theta, step);
    sum += *h;
  }
  return sum / static_cast<double>(p.agents());
}

Eigen::VectorXd feasible_hessian_eigenvalues(const Problem& p, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd h = aggregated_hessian(p, theta);
  if (p.on_unit_sphere()) {
    const Eigen::MatrixXd basis = tangent_basis(theta.normalized());
    h = basis.transpose() * h * basis;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

PointKind classify_stationary_point(const Problem& p, const Eigen::VectorXd& theta,
                                    double grad_tol, double eig_tol) {
  if (!(grad_tol > 0.0) || !(eig_tol > 0.0))
    throw Error(ErrorCode::kInvalidConfig, "classification tolerances must be positive");
  if (aggregated_gradient(p, theta).norm() > grad_tol) return PointKind::kNotStationary;

  const Eigen::VectorXd eig = feasible_hessian_eigenvalues(p, theta);
  const bool has_positive = (eig.array() > eig_tol).any();
  const bool has_negative = (eig.array() < -eig_tol).any();
  const bool all_positive = (eig.array() > eig_tol).all();
  const bool all_negative = (eig.array() < -eig_tol).all();
  if (all_positive) return PointKind::kMinimum;
  if (all_negative) return PointKind::kMaximum;
  if (has_positive && has_negative) return PointKind::kStrictSaddle;
  return PointKind::kDegenerate;
}

Eigen::VectorXd refine_stationary_point(const Problem& p, const Eigen::VectorXd& theta0,
                                        double tol, int max_iter) {
  Eigen::VectorXd x = p.on_unit_sphere() ? theta0.normalized() : theta0;
  Eigen::VectorXd best = x;
  double best_norm = aggregated_gradient(p, x).norm();

  for (int iter = 0; iter < max_iter && best_norm > tol; ++iter) {
    const Eigen::VectorXd g = aggregated_gradient(p, x);
    const Eigen::MatrixXd h = aggregated_hessian(p, x);
    if (p.on_unit_sphere()) {
      const Eigen::MatrixXd basis = tangent_basis(x);
      const Eigen::MatrixXd ht = basis.transpose() * h * basis;
      const Eigen::VectorXd xi = ht.fullPivLu().solve(-(basis.transpose() * g));
      x = (x + basis * xi).normalized();
    } else {
      x -= h.fullPivLu().solve(g);
    }
    if (!x.allFinite()) break;
    const double norm = aggregated_gradient(p, x).norm();
    if (norm < best_norm) {
      best = x;
      best_norm = norm;
    }
  }
  return best;
}

}  // namespace dpdopt
