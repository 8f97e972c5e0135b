#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "dpdopt/error.hpp"
#include "dpdopt/problems.hpp"

namespace dpdopt {

namespace {

constexpr double kRegionHalfWidth = 10.0;

}  // namespace

QuadraticProblem::QuadraticProblem(Eigen::VectorXd diagonal, std::vector<Eigen::VectorXd> centers)
    : diagonal_(std::move(diagonal)), centers_(std::move(centers)) {
  if (diagonal_.size() == 0) throw Error(ErrorCode::kInvalidConfig, "empty diagonal");
  if (centers_.empty()) throw Error(ErrorCode::kInvalidConfig, "no agents");
  if (!diagonal_.allFinite()) throw Error(ErrorCode::kInvalidConfig, "non-finite diagonal");
  stationary_ = Eigen::VectorXd::Zero(diagonal_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    if (centers_[i].size() != diagonal_.size())
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("center {} has length {}, expected {}", i, centers_[i].size(),
                              diagonal_.size()));
    stationary_ += centers_[i];
  }
  stationary_ /= static_cast<double>(centers_.size());

  // Hessian is constant, so rho is 0; G is taken over region().
  constants_.nu = 2.0 * diagonal_.cwiseAbs().maxCoeff();
  constants_.rho = 0.0;
  double g = 0.0;
  for (const auto& c : centers_) {
    const Eigen::VectorXd far =
        2.0 * diagonal_.cwiseAbs().cwiseProduct(c.cwiseAbs() +
                                                Eigen::VectorXd::Constant(c.size(),
                                                                          kRegionHalfWidth) +
                                                stationary_.cwiseAbs());
    g = std::max(g, far.norm());
  }
  constants_.gradient_bound = g;
  constants_.samples_per_agent.assign(centers_.size(), 1);
}

double QuadraticProblem::objective(std::size_t agent, std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double diff = x[c] - centers_[agent](static_cast<Eigen::Index>(c));
    total += diagonal_(static_cast<Eigen::Index>(c)) * diff * diff;
  }
  return total;
}

void QuadraticProblem::gradient(std::size_t agent, std::span<const double> x,
                                std::span<double> out) const {
  for (std::size_t c = 0; c < x.size(); ++c) {
    const auto e = static_cast<Eigen::Index>(c);
    out[c] = 2.0 * diagonal_(e) * (x[c] - centers_[agent](e));
  }
}

std::optional<Eigen::MatrixXd> QuadraticProblem::analytic_hessian(
    std::size_t, std::span<const double>) const {
  return Eigen::MatrixXd((2.0 * diagonal_).asDiagonal());
}

std::optional<Box> QuadraticProblem::region() const {
  const auto d = stationary_.size();
  return Box{stationary_ - Eigen::VectorXd::Constant(d, kRegionHalfWidth),
             stationary_ + Eigen::VectorXd::Constant(d, kRegionHalfWidth)};
}

std::vector<KnownPoint> QuadraticProblem::known_points() const {
  PointKind kind = PointKind::kDegenerate;
  if ((diagonal_.array() > 0.0).all()) kind = PointKind::kMinimum;
  else if ((diagonal_.array() < 0.0).all()) kind = PointKind::kMaximum;
  else if ((diagonal_.array() > 0.0).any() && (diagonal_.array() < 0.0).any())
    kind = PointKind::kStrictSaddle;
  return {{"mean center", stationary_, kind}};
}

std::optional<Eigen::VectorXd> QuadraticProblem::reference_minimum() const {
  if ((diagonal_.array() > 0.0).all()) return stationary_;
  return std::nullopt;
}

std::optional<Eigen::VectorXd> QuadraticProblem::reference_saddle() const {
  if ((diagonal_.array() > 0.0).any() && (diagonal_.array() < 0.0).any()) return stationary_;
  return std::nullopt;
}

}  // namespace dpdopt
