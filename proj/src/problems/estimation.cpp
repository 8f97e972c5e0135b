#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "dpdopt/error.hpp"
#include "dpdopt/problems.hpp"

namespace dpdopt {

namespace {

constexpr int kBoundarySamples = 2000;
constexpr int kGridSamples = 200;

Eigen::VectorXd to_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
double smoothstep_slope(double u) { return 6.0 * u * (1.0 - u); }

}  // namespace

EstimationProblem::EstimationProblem(Eigen::MatrixXd measurement,
                                     std::vector<Eigen::VectorXd> observations, double kappa,
                                     Box box, double ramp_radius, std::vector<KnownPoint> seeds)
    : measurement_(std::move(measurement)),
      observations_(std::move(observations)),
      kappa_(kappa),
      box_(std::move(box)),
      ramp_radius_(ramp_radius),
      seeds_(std::move(seeds)) {
  const auto d = measurement_.cols();
  if (observations_.empty()) throw Error(ErrorCode::kInvalidConfig, "no agents");
  if (box_.lo.size() != d || box_.hi.size() != d)
    throw Error(ErrorCode::kDimensionMismatch, "region dimension");
  if (!(box_.lo.array() < box_.hi.array()).all())
    throw Error(ErrorCode::kInvalidConfig, "region must satisfy lo < hi");
  if (!(ramp_radius_ > 0.0)) throw Error(ErrorCode::kInvalidConfig, "ramp radius must be positive");

  gram2_ = 2.0 * measurement_.transpose() * measurement_;
  for (const auto& y : observations_) {
    if (y.size() != measurement_.rows())
      throw Error(ErrorCode::kDimensionMismatch, "observation length");
    pull_.push_back(2.0 * measurement_.transpose() * y);
  }

  // Ramp slope: largest gradient norm on the box boundary (2-D boxes are
  // walked edge by edge; higher dimensions use the box corners and edge
  // midpoints of each coordinate face).
  double boundary_max = 0.0;
  auto visit_boundary = [&](const Eigen::VectorXd& t) {
    for (std::size_t i = 0; i < agents(); ++i)
      boundary_max = std::max(boundary_max, inner_gradient(i, t).norm());
  };
  for (Eigen::Index c = 0; c < d; ++c) {
    for (double face : {box_.lo(c), box_.hi(c)}) {
      for (int s = 0; s <= kBoundarySamples; ++s) {
        Eigen::VectorXd t = 0.5 * (box_.lo + box_.hi);
        const double frac = static_cast<double>(s) / kBoundarySamples;
        for (Eigen::Index o = 0; o < d; ++o)
          if (o != c) t(o) = box_.lo(o) + frac * (box_.hi(o) - box_.lo(o));
        t(c) = face;
        visit_boundary(t);
      }
    }
  }
  ramp_slope_ = boundary_max;

  // Sampled constants over a regular grid of the box (first two axes; the
  // remaining coordinates sit at the box centre).
  double grad_max = boundary_max;
  double hess_max = 0.0;
  double hess_lip = 0.0;
  const Eigen::VectorXd centre = 0.5 * (box_.lo + box_.hi);
  auto grid_point = [&](int a, int b) {
    Eigen::VectorXd t = centre;
    t(0) = box_.lo(0) + (box_.hi(0) - box_.lo(0)) * a / kGridSamples;
    if (d > 1) t(1) = box_.lo(1) + (box_.hi(1) - box_.lo(1)) * b / kGridSamples;
    return t;
  };
  for (int a = 0; a <= kGridSamples; ++a) {
    for (int b = 0; b <= kGridSamples; ++b) {
      const Eigen::VectorXd t = grid_point(a, b);
      if (t.norm() == 0.0) continue;
      for (std::size_t i = 0; i < agents(); ++i)
        grad_max = std::max(grad_max, inner_gradient(i, t).norm());
      const Eigen::MatrixXd h = inner_hessian(t);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
      hess_max = std::max(hess_max, eig.eigenvalues().cwiseAbs().maxCoeff());
      if (a < kGridSamples) {
        const Eigen::VectorXd next = grid_point(a + 1, b);
        if (next.norm() != 0.0) {
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(inner_hessian(next) - h,
                                                              Eigen::EigenvaluesOnly);
          hess_lip = std::max(hess_lip,
                              diff.eigenvalues().cwiseAbs().maxCoeff() / (next - t).norm());
        }
      }
    }
  }
  constants_.nu = hess_max;
  constants_.rho = hess_lip;
  constants_.gradient_bound = grad_max;
  constants_.samples_per_agent.assign(agents(), 1);

  for (const auto& seed : seeds_) {
    if (seed.coords.size() != d) throw Error(ErrorCode::kDimensionMismatch, "seed point length");
    if (seed.expected == PointKind::kMinimum && !minimum_)
      minimum_ = refine_stationary_point(*this, seed.coords);
    if (seed.expected == PointKind::kStrictSaddle && !saddle_)
      saddle_ = refine_stationary_point(*this, seed.coords);
  }
}

double EstimationProblem::inner_objective(std::size_t agent, const Eigen::VectorXd& t) const {
  const double norm = t.norm();
  return (observations_[agent] - measurement_ * t).squaredNorm() + kappa_ * norm * norm * norm;
}

Eigen::VectorXd EstimationProblem::inner_gradient(std::size_t agent,
                                                  const Eigen::VectorXd& t) const {
  return -pull_[agent] + gram2_ * t + 3.0 * kappa_ * t.norm() * t;
}

// Derived from the gradient: d/dt (||t|| t) = ||t|| I + t t^T / ||t||.
Eigen::MatrixXd EstimationProblem::inner_hessian(const Eigen::VectorXd& t) const {
  const double norm = t.norm();
  if (norm == 0.0) throw Error(ErrorCode::kSingularPoint, "Hessian of ||t||^3 term at t = 0");
  const auto d = t.size();
  return gram2_ +
         3.0 * kappa_ * (norm * Eigen::MatrixXd::Identity(d, d) + t * t.transpose() / norm);
}

bool EstimationProblem::inside(std::span<const double> x) const {
  for (std::size_t c = 0; c < x.size(); ++c)
    if (x[c] < box_.lo(c) || x[c] > box_.hi(c)) return false;
  return true;
}

double EstimationProblem::objective(std::size_t agent, std::span<const double> x) const {
  const Eigen::VectorXd t = to_vector(x);
  if (inside(x)) return inner_objective(agent, t);

  const Eigen::VectorXd clamped = t.cwiseMax(box_.lo).cwiseMin(box_.hi);
  const Eigen::VectorXd offset = t - clamped;
  const double r = offset.norm();
  const double s = smoothstep(std::min(r / ramp_radius_, 1.0));
  return inner_objective(agent, clamped) +
         (1.0 - s) * inner_gradient(agent, clamped).dot(offset) + ramp_slope_ * r * s;
}

void EstimationProblem::gradient(std::size_t agent, std::span<const double> x,
                                 std::span<double> out) const {
  const Eigen::VectorXd t = to_vector(x);
  Eigen::Map<Eigen::VectorXd> result(out.data(), static_cast<Eigen::Index>(out.size()));
  if (inside(x)) {
    result = inner_gradient(agent, t);
    return;
  }

  const auto d = t.size();
  const Eigen::VectorXd clamped = t.cwiseMax(box_.lo).cwiseMin(box_.hi);
  const Eigen::VectorXd offset = t - clamped;
  const double r = offset.norm();
  const double u = std::min(r / ramp_radius_, 1.0);
  const double s = smoothstep(u);
  const double ds = u < 1.0 ? smoothstep_slope(u) : 0.0;

  // free(c) = 1 where the projection does not clamp coordinate c.
  Eigen::VectorXd free(d);
  for (Eigen::Index c = 0; c < d; ++c) free(c) = offset(c) == 0.0 ? 1.0 : 0.0;

  const Eigen::VectorXd gc = inner_gradient(agent, clamped);
  const Eigen::VectorXd hd = inner_hessian(clamped) * offset;
  const Eigen::VectorXd linear_grad =
      free.cwiseProduct(hd) + (Eigen::VectorXd::Ones(d) - free).cwiseProduct(gc);
  const Eigen::VectorXd normal = offset / r;

  result = free.cwiseProduct(gc) + (1.0 - s) * linear_grad +
           (-(ds / ramp_radius_) * gc.dot(offset) + ramp_slope_ * (s + u * ds)) * normal;
}

std::optional<Eigen::MatrixXd> EstimationProblem::analytic_hessian(
    std::size_t, std::span<const double> x) const {
  if (!inside(x)) return std::nullopt;
  return inner_hessian(to_vector(x));
}

std::shared_ptr<const EstimationProblem> make_paper_estimation_problem() {
  Eigen::MatrixXd m(3, 2);
  m << 1.0, 0.0, 0.0, 2.0, 0.0, 0.0;
  std::vector<Eigen::VectorXd> y;
  for (int i = 1; i <= 5; ++i) {
    Eigen::VectorXd obs(3);
    obs << i * (1.0 / 3.0), i * (2.0 / 3.0), 0.0;
    y.push_back(obs);
  }
  Box box{Eigen::Vector2d(-8.0, -3.0), Eigen::Vector2d(4.0, 3.0)};
  std::vector<KnownPoint> seeds{
      {"printed minimum", Eigen::Vector2d(1.3478, 1.0690), PointKind::kMinimum},
      {"printed saddle", Eigen::Vector2d(-7.4336, 1.3959), PointKind::kStrictSaddle},
  };
  return std::make_shared<const EstimationProblem>(m, std::move(y), -0.1, std::move(box), 0.5,
                                                   std::move(seeds));
}

}  // namespace dpdopt
