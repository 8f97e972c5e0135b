#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpdopt/error.hpp"
#include "dpdopt/kernels.hpp"
#include "dpdopt/problems.hpp"

namespace dpdopt {

namespace {

constexpr int kConstantSamples = 256;
constexpr double kUnitNormTolerance = 1e-8;
constexpr std::uint64_t kMixingSalt = 0x1ca0;

std::vector<double>& projection_scratch(std::size_t n) {
  thread_local std::vector<double> proj;
  if (proj.size() < n) proj.resize(n);
  return proj;
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(d);
  do {
    for (Eigen::Index c = 0; c < d; ++c) u(c) = normal(rng);
  } while (u.norm() == 0.0);
  return u.normalized();
}

}  // namespace

IcaProblem::IcaProblem(Eigen::MatrixXd mixing, std::vector<std::vector<Eigen::VectorXd>> samples,
                       double sign_factor)
    : mixing_(std::move(mixing)), sign_factor_(sign_factor) {
  const auto d = mixing_.rows();
  if (d < 2 || mixing_.cols() != d)
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("mixing matrix is {}x{}", mixing_.rows(), mixing_.cols()));
  const double orth = (mixing_.transpose() * mixing_ - Eigen::MatrixXd::Identity(d, d))
                          .cwiseAbs()
                          .maxCoeff();
  if (orth > 1e-10)
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("mixing matrix is not orthonormal (max |A^T A - I| = {:.3g})", orth));
  if (samples.empty()) throw Error(ErrorCode::kInvalidConfig, "no agents");
  if (sign_factor_ != 1.0 && sign_factor_ != -1.0)
    throw Error(ErrorCode::kInvalidConfig, "sign factor must be +1 or -1");

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& agent = samples[i];
    if (agent.empty())
      throw Error(ErrorCode::kInvalidConfig, fmt::format("agent {} has no samples", i));
    const std::size_t n = agent.size();
    std::vector<double> soa(static_cast<std::size_t>(d) * n);
    for (std::size_t s = 0; s < n; ++s) {
      if (agent[s].size() != d)
        throw Error(ErrorCode::kDimensionMismatch,
                    fmt::format("agent {} sample {} has length {}", i, s, agent[s].size()));
      for (Eigen::Index c = 0; c < d; ++c) soa[static_cast<std::size_t>(c) * n + s] = agent[s](c);
    }
    soa_.push_back(std::move(soa));
    counts_.push_back(n);
  }

  // Constants sampled over random unit vectors with a fixed generator.
  std::mt19937_64 rng(kMixingSalt);
  Eigen::VectorXd prev;
  Eigen::MatrixXd prev_h;
  for (int t = 0; t < kConstantSamples; ++t) {
    const Eigen::VectorXd u = random_unit(rng, d);
    const std::span<const double> view(u.data(), static_cast<std::size_t>(d));
    Eigen::VectorXd g(d);
    Eigen::MatrixXd h_mean = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < agents(); ++i) {
      gradient(i, view, {g.data(), static_cast<std::size_t>(d)});
      constants_.gradient_bound = std::max(constants_.gradient_bound, g.norm());
      const Eigen::MatrixXd h = *analytic_hessian(i, view);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
      constants_.nu = std::max(constants_.nu, eig.eigenvalues().cwiseAbs().maxCoeff());
      h_mean += h / static_cast<double>(agents());
    }
    if (t > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(h_mean - prev_h, Eigen::EigenvaluesOnly);
      constants_.rho =
          std::max(constants_.rho, diff.eigenvalues().cwiseAbs().maxCoeff() / (u - prev).norm());
    }
    prev = u;
    prev_h = h_mean;
  }
  constants_.samples_per_agent = counts_;

  saddle_ = refine_stationary_point(*this, population_saddle());
  first_column_ = refine_stationary_point(*this, mixing_.col(0));
}

Eigen::VectorXd IcaProblem::sample(std::size_t agent, std::size_t s) const {
  const auto d = mixing_.rows();
  const std::size_t n = counts_[agent];
  Eigen::VectorXd y(d);
  for (Eigen::Index c = 0; c < d; ++c) y(c) = soa_[agent][static_cast<std::size_t>(c) * n + s];
  return y;
}

Eigen::VectorXd IcaProblem::population_saddle() const {
  const auto d = mixing_.rows();
  return mixing_ * Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
}

double IcaProblem::objective(std::size_t agent, std::span<const double> x) const {
  const std::size_t n = counts_[agent];
  auto& proj = projection_scratch(n);
  thread_local std::vector<double> grad_sum;
  grad_sum.resize(x.size());
  const double quartic = kernels::active().quartic_moments(soa_[agent].data(), x.size(), n, n,
                                                           x.data(), grad_sum.data(), proj.data());
  return sign_factor_ * quartic / static_cast<double>(n);
}

Eigen::VectorXd IcaProblem::euclidean_gradient(std::size_t agent,
                                               std::span<const double> x) const {
  const std::size_t n = counts_[agent];
  auto& proj = projection_scratch(n);
  Eigen::VectorXd g(static_cast<Eigen::Index>(x.size()));
  kernels::active().quartic_moments(soa_[agent].data(), x.size(), n, n, x.data(), g.data(),
                                    proj.data());
  return (4.0 * sign_factor_ / static_cast<double>(n)) * g;
}

void IcaProblem::gradient(std::size_t agent, std::span<const double> x,
                          std::span<double> out) const {
  const Eigen::VectorXd g = euclidean_gradient(agent, x);
  double radial = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) radial += x[c] * g(static_cast<Eigen::Index>(c));
  for (std::size_t c = 0; c < x.size(); ++c)
    out[c] = g(static_cast<Eigen::Index>(c)) - radial * x[c];
}

// Riemannian Hessian on the sphere: P (H_e - (u . g_e) I) P.
std::optional<Eigen::MatrixXd> IcaProblem::analytic_hessian(std::size_t agent,
                                                            std::span<const double> x) const {
  const auto d = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::VectorXd> u(x.data(), d);
  const std::size_t n = counts_[agent];
  Eigen::MatrixXd he = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t s = 0; s < n; ++s) {
    const Eigen::VectorXd y = sample(agent, s);
    const double p = u.dot(y);
    he.noalias() += (p * p) * (y * y.transpose());
  }
  he *= 12.0 * sign_factor_ / static_cast<double>(n);
  const Eigen::VectorXd ge = euclidean_gradient(agent, x);
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(d, d) - u * u.transpose();
  Eigen::MatrixXd h = proj * (he - u.dot(ge) * Eigen::MatrixXd::Identity(d, d)) * proj;
  return 0.5 * (h + h.transpose());
}

void IcaProblem::project(std::span<double> x) const {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) return;
  for (double& v : x) v /= norm;
}

void IcaProblem::sample_initial(std::mt19937_64& rng, std::span<double> out) const {
  const Eigen::VectorXd u = random_unit(rng, static_cast<Eigen::Index>(out.size()));
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = u(static_cast<Eigen::Index>(c));
}

std::vector<KnownPoint> IcaProblem::known_points() const {
  std::vector<KnownPoint> points;
  if (saddle_) points.push_back({"uniform-weight stationary point", *saddle_, PointKind::kMaximum});
  if (first_column_) points.push_back({"first mixing column", *first_column_, PointKind::kMinimum});
  return points;
}

double IcaProblem::optimization_error(std::span<const double> x) const {
  return ica_reconstruction_error(
      mixing_, Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

std::shared_ptr<const IcaProblem> make_ica_problem(std::size_t d, std::size_t agents,
                                                   std::size_t samples_per_agent,
                                                   std::uint64_t seed) {
  if (d < 2 || agents < 1 || samples_per_agent < 1)
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("ica needs d >= 2, agents >= 1, samples >= 1 (got {}, {}, {})", d,
                            agents, samples_per_agent));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kMixingSalt)};
  std::mt19937_64 rng(seq);
  const auto dim = static_cast<Eigen::Index>(d);

  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) g(r, c) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd a = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < dim; ++c)
    if (r(c, c) < 0.0) a.col(c) = -a.col(c);

  std::bernoulli_distribution coin(0.5);
  double fourth = 0.0;
  std::vector<std::vector<Eigen::VectorXd>> samples(agents);
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t s = 0; s < samples_per_agent; ++s) {
      Eigen::VectorXd z(dim);
      for (Eigen::Index c = 0; c < dim; ++c) {
        z(c) = coin(rng) ? 1.0 : -1.0;
        fourth += std::pow(z(c), 4);
      }
      samples[i].push_back(a * z);
    }
  }
  const double mu = fourth / static_cast<double>(d * agents * samples_per_agent);
  const double sign_factor = mu < 3.0 ? 1.0 : -1.0;
  return std::make_shared<const IcaProblem>(std::move(a), std::move(samples), sign_factor);
}

double ica_reconstruction_error(const Eigen::MatrixXd& mixing, const Eigen::VectorXd& u) {
  if (u.size() != mixing.rows())
    throw Error(ErrorCode::kDimensionMismatch, "direction length");
  if (std::abs(u.norm() - 1.0) > kUnitNormTolerance)
    throw Error(ErrorCode::kNotUnitNorm, fmt::format("||u|| = {:.17g}", u.norm()));
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < mixing.cols(); ++j)
    best = std::min({best, (u - mixing.col(j)).norm(), (u + mixing.col(j)).norm()});
  return best;
}

double ica_reconstruction_error(const IcaProblem& p, const Eigen::VectorXd& u) {
  return ica_reconstruction_error(p.mixing(), u);
}

}  // namespace dpdopt
