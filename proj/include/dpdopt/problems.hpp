#pragma once

// Objective functions split across agents: F(x) = (1/m) sum_i f_i(x).

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpdopt {

enum class PointKind { kMinimum, kMaximum, kStrictSaddle, kDegenerate, kNotStationary };

std::string_view point_kind_name(PointKind kind);

// Smoothness constants. Values for the bundled problems are sampled
// estimates over their region, not certified bounds.
struct ProblemConstants {
  double nu = 0.0;              // gradient Lipschitz constant
  double rho = 0.0;             // Hessian Lipschitz constant
  double gradient_bound = 0.0;  // G
  std::vector<std::size_t> samples_per_agent;
};

struct KnownPoint {
  std::string label;
  Eigen::VectorXd coords;
  PointKind expected;
};

// Axis-aligned box, lo < hi componentwise.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t agents() const = 0;
  virtual const ProblemConstants& constants() const = 0;

  // Unchecked hot path; x.size() == dim(), agent < agents().
  virtual double objective(std::size_t agent, std::span<const double> x) const = 0;
  virtual void gradient(std::size_t agent, std::span<const double> x,
                        std::span<double> out) const = 0;
  // Closed-form per-agent Hessian at x, or nullopt when none applies there.
  virtual std::optional<Eigen::MatrixXd> analytic_hessian(
      std::size_t agent, std::span<const double> x) const;

  // Sphere-constrained problems report Riemannian gradients/Hessians and
  // renormalize iterates in project().
  virtual bool on_unit_sphere() const { return false; }
  virtual void project(std::span<double> /*x*/) const {}

  virtual std::optional<Box> region() const { return std::nullopt; }
  // Uniform draw in region(), or on the unit sphere for constrained problems.
  virtual void sample_initial(std::mt19937_64& rng, std::span<double> out) const;

  virtual std::vector<KnownPoint> known_points() const { return {}; }
  virtual std::optional<Eigen::VectorXd> reference_minimum() const { return std::nullopt; }
  virtual std::optional<Eigen::VectorXd> reference_saddle() const { return std::nullopt; }
  // Distance of one agent's iterate to the solution set.
  virtual double optimization_error(std::span<const double> x) const;
  virtual bool has_optimization_error() const { return reference_minimum().has_value(); }
};

// --- generic operations --------------------------------------------------

// Checked per-agent gradient (kDimensionMismatch on bad agent or length).
Eigen::VectorXd agent_gradient(const Problem& p, std::size_t agent,
                               const Eigen::VectorXd& theta);
Eigen::VectorXd aggregated_gradient(const Problem& p, const Eigen::VectorXd& theta);
double aggregated_objective(const Problem& p, const Eigen::VectorXd& theta);

enum class HessianMode { kAuto, kFiniteDifference };

// Mean of per-agent Hessians. kAuto uses closed forms when every agent has
// one at theta and central differences of the gradient otherwise.
Eigen::MatrixXd aggregated_hessian(const Problem& p, const Eigen::VectorXd& theta,
                                   HessianMode mode = HessianMode::kAuto,
                                   double step = 1e-5);

// Eigenvalues of the aggregated Hessian on the feasible directions (the
// tangent space for sphere-constrained problems), ascending.
Eigen::VectorXd feasible_hessian_eigenvalues(const Problem& p, const Eigen::VectorXd& theta);

PointKind classify_stationary_point(const Problem& p, const Eigen::VectorXd& theta,
                                    double grad_tol, double eig_tol);

// Newton iteration on the aggregated gradient from theta0 (Riemannian on
// the sphere). Returns the best iterate found.
Eigen::VectorXd refine_stationary_point(const Problem& p, const Eigen::VectorXd& theta0,
                                        double tol = 1e-13, int max_iter = 60);

// --- decentralized estimation -------------------------------------------

// f_i(t) = ||Y_i - M t||^2 + kappa ||t||^3 inside the box. Outside, with
// t_c the box projection, r = ||t - t_c|| and s the smoothstep of r / R:
//   f_i(t) = f_i(t_c) + (1 - s) grad f_i(t_c).(t - t_c) + c r s
// which is C^1 across the boundary and grows with slope c beyond R.
class EstimationProblem final : public Problem {
 public:
  EstimationProblem(Eigen::MatrixXd measurement, std::vector<Eigen::VectorXd> observations,
                    double kappa, Box box, double ramp_radius,
                    std::vector<KnownPoint> seeds = {});

  std::string_view name() const override { return "estimation"; }
  std::size_t dim() const override { return static_cast<std::size_t>(measurement_.cols()); }
  std::size_t agents() const override { return observations_.size(); }
  const ProblemConstants& constants() const override { return constants_; }

  double objective(std::size_t agent, std::span<const double> x) const override;
  void gradient(std::size_t agent, std::span<const double> x,
                std::span<double> out) const override;
  // Closed form inside the box; throws kSingularPoint at theta = 0.
  std::optional<Eigen::MatrixXd> analytic_hessian(
      std::size_t agent, std::span<const double> x) const override;

  std::optional<Box> region() const override { return box_; }
  std::vector<KnownPoint> known_points() const override { return seeds_; }
  std::optional<Eigen::VectorXd> reference_minimum() const override { return minimum_; }
  std::optional<Eigen::VectorXd> reference_saddle() const override { return saddle_; }

  const Eigen::MatrixXd& measurement() const { return measurement_; }
  const std::vector<Eigen::VectorXd>& observations() const { return observations_; }
  double kappa() const { return kappa_; }
  double ramp_radius() const { return ramp_radius_; }
  double ramp_slope() const { return ramp_slope_; }

 private:
  double inner_objective(std::size_t agent, const Eigen::VectorXd& t) const;
  Eigen::VectorXd inner_gradient(std::size_t agent, const Eigen::VectorXd& t) const;
  Eigen::MatrixXd inner_hessian(const Eigen::VectorXd& t) const;
  bool inside(std::span<const double> x) const;

  Eigen::MatrixXd measurement_;
  std::vector<Eigen::VectorXd> observations_;
  Eigen::MatrixXd gram2_;                   // 2 M^T M
  std::vector<Eigen::VectorXd> pull_;       // 2 M^T Y_i
  double kappa_;
  Box box_;
  double ramp_radius_;
  double ramp_slope_ = 0.0;
  ProblemConstants constants_;
  std::vector<KnownPoint> seeds_;
  std::optional<Eigen::VectorXd> minimum_;
  std::optional<Eigen::VectorXd> saddle_;
};

// Five agents, d = 2: M = [[1,0],[0,2],[0,0]], Y_i = i (1/3, 2/3, 0),
// kappa = -0.1, box [-8,4] x [-3,3], ramp radius 0.5.
std::shared_ptr<const EstimationProblem> make_paper_estimation_problem();

// --- ICA on the unit sphere -----------------------------------------------

// f_i(u) = sign_factor * mean_s (u . y_s)^4 over agent i's samples, with
// y = A z, A orthonormal and z Rademacher.
class IcaProblem final : public Problem {
 public:
  IcaProblem(Eigen::MatrixXd mixing, std::vector<std::vector<Eigen::VectorXd>> samples,
             double sign_factor);

  std::string_view name() const override { return "ica"; }
  std::size_t dim() const override { return static_cast<std::size_t>(mixing_.rows()); }
  std::size_t agents() const override { return soa_.size(); }
  const ProblemConstants& constants() const override { return constants_; }

  double objective(std::size_t agent, std::span<const double> x) const override;
  // Riemannian: Euclidean gradient minus its radial component.
  void gradient(std::size_t agent, std::span<const double> x,
                std::span<double> out) const override;
  std::optional<Eigen::MatrixXd> analytic_hessian(
      std::size_t agent, std::span<const double> x) const override;

  bool on_unit_sphere() const override { return true; }
  void project(std::span<double> x) const override;
  void sample_initial(std::mt19937_64& rng, std::span<double> out) const override;

  std::vector<KnownPoint> known_points() const override;
  // population_saddle() refined to a stationary point of the sample objective.
  std::optional<Eigen::VectorXd> reference_saddle() const override { return saddle_; }
  double optimization_error(std::span<const double> x) const override;
  bool has_optimization_error() const override { return true; }

  const Eigen::MatrixXd& mixing() const { return mixing_; }
  double sign_factor() const { return sign_factor_; }
  std::size_t samples_per_agent(std::size_t agent) const { return counts_[agent]; }
  // Coordinate-major copy of agent i's samples: d rows of samples_per_agent.
  std::span<const double> samples(std::size_t agent) const { return soa_[agent]; }
  Eigen::VectorXd sample(std::size_t agent, std::size_t s) const;
  // Stationary point A d^{-1/2} (1, ..., 1) of the population objective.
  // For sub-Gaussian sources it is a local maximum on the sphere.
  Eigen::VectorXd population_saddle() const;

 private:
  Eigen::VectorXd euclidean_gradient(std::size_t agent, std::span<const double> x) const;

  Eigen::MatrixXd mixing_;
  std::vector<std::vector<double>> soa_;
  std::vector<std::size_t> counts_;
  double sign_factor_;
  ProblemConstants constants_;
  std::optional<Eigen::VectorXd> saddle_;
  std::optional<Eigen::VectorXd> first_column_;
};

// Random orthonormal A (QR of a Gaussian matrix, diagonal of R made
// positive), Rademacher sources; agent i gets the i-th contiguous block.
std::shared_ptr<const IcaProblem> make_ica_problem(std::size_t d, std::size_t agents,
                                                   std::size_t samples_per_agent,
                                                   std::uint64_t seed);

// min over columns a_j and signs of ||u -/+ a_j||. Throws kNotUnitNorm.
double ica_reconstruction_error(const IcaProblem& p, const Eigen::VectorXd& u);
double ica_reconstruction_error(const Eigen::MatrixXd& mixing, const Eigen::VectorXd& u);

// --- diagonal quadratic ----------------------------------------------------

// f_i(x) = sum_c a_c (x_c - center_i[c])^2; stationary at the mean center.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(Eigen::VectorXd diagonal, std::vector<Eigen::VectorXd> centers);

  std::string_view name() const override { return "custom_quadratic"; }
  std::size_t dim() const override { return static_cast<std::size_t>(diagonal_.size()); }
  std::size_t agents() const override { return centers_.size(); }
  const ProblemConstants& constants() const override { return constants_; }

  double objective(std::size_t agent, std::span<const double> x) const override;
  void gradient(std::size_t agent, std::span<const double> x,
                std::span<double> out) const override;
  std::optional<Eigen::MatrixXd> analytic_hessian(
      std::size_t agent, std::span<const double> x) const override;

  std::optional<Box> region() const override;
  std::vector<KnownPoint> known_points() const override;
  std::optional<Eigen::VectorXd> reference_minimum() const override;
  std::optional<Eigen::VectorXd> reference_saddle() const override;

  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const std::vector<Eigen::VectorXd>& centers() const { return centers_; }

 private:
  Eigen::VectorXd diagonal_;
  std::vector<Eigen::VectorXd> centers_;
  Eigen::VectorXd stationary_;
  ProblemConstants constants_;
};

}  // namespace dpdopt
