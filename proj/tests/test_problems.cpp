#include <gtest/gtest.h>

#include <random>

#include "dpdopt/error.hpp"
#include "dpdopt/problems.hpp"
#include "oracles.hpp"

using namespace dpdopt;

namespace {

// Closed-form f_i inside the box, written from the problem statement.
double estimation_inner(std::size_t agent, const std::vector<double>& t) {
  const double s = static_cast<double>(agent + 1);
  const double r0 = s / 3.0 - t[0];
  const double r1 = 2.0 * s / 3.0 - 2.0 * t[1];
  const double n = std::sqrt(t[0] * t[0] + t[1] * t[1]);
  return r0 * r0 + r1 * r1 - 0.1 * n * n * n;
}

oracle::Mat to_mat(const Eigen::MatrixXd& m) {
  oracle::Mat out = oracle::zeros(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

const auto& paper() {
  static auto p = make_paper_estimation_problem();
  return *p;
}

}  // namespace

TEST(Estimation, PaperInstance) {
  const auto& p = paper();
  EXPECT_EQ(p.agents(), 5u);
  EXPECT_EQ(p.dim(), 2u);
  EXPECT_EQ(p.kappa(), -0.1);
  const Eigen::VectorXd& y3 = p.observations()[2];
  EXPECT_NEAR(y3(0), 1.0, 1e-15);
  EXPECT_NEAR(y3(1), 2.0, 1e-15);
  EXPECT_EQ(y3(2), 0.0);
  Eigen::MatrixXd m(3, 2);
  m << 1, 0, 0, 2, 0, 0;
  EXPECT_EQ(p.measurement(), m);
}

TEST(Estimation, GradientAtOrigin) {
  const Eigen::VectorXd g = agent_gradient(paper(), 0, Eigen::Vector2d::Zero());
  EXPECT_NEAR(g(0), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(g(1), -8.0 / 3.0, 1e-15);
  const auto fd = oracle::fd_gradient(
      [](const std::vector<double>& t) { return estimation_inner(0, t); }, {0.0, 0.0}, 1e-5);
  EXPECT_NEAR(g(0), fd[0], 1e-6);
  EXPECT_NEAR(g(1), fd[1], 1e-6);
}

TEST(Estimation, ObjectiveMatchesClosedFormInside) {
  oracle::Gen g(30);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> x{g.uniform(-8, 4), g.uniform(-3, 3)};
    for (std::size_t i = 0; i < 5; ++i)
      EXPECT_NEAR(paper().objective(i, x), estimation_inner(i, x), 1e-10);
  }
}

TEST(Estimation, PrintedPointsNearlyStationary) {
  EXPECT_LE(aggregated_gradient(paper(), Eigen::Vector2d(1.3478, 1.0690)).norm(), 1e-2);
  EXPECT_LE(aggregated_gradient(paper(), Eigen::Vector2d(-7.4336, 1.3959)).norm(), 1e-2);
}

TEST(Estimation, RefinedPointsAgreeWithIndependentNewton) {
  const auto min = paper().reference_minimum();
  const auto sad = paper().reference_saddle();
  ASSERT_TRUE(min && sad);
  const Eigen::VectorXd min_ref = oracle::newton_root(paper(), Eigen::Vector2d(1.3478, 1.0690));
  const Eigen::VectorXd sad_ref = oracle::newton_root(paper(), Eigen::Vector2d(-7.4336, 1.3959));
  EXPECT_LE((*min - min_ref).norm(), 1e-9);
  EXPECT_LE((*sad - sad_ref).norm(), 1e-9);
  EXPECT_LE(aggregated_gradient(paper(), *min).norm(), 1e-10);
  EXPECT_LE(aggregated_gradient(paper(), *sad).norm(), 1e-10);
}

TEST(Estimation, HessianEigenvaluesAtPrintedPoints) {
  const auto at_min = oracle::jacobi_eigenvalues(
      to_mat(aggregated_hessian(paper(), Eigen::Vector2d(1.3478, 1.0690))));
  EXPECT_GT(at_min[0], 0.0);
  EXPECT_GT(at_min[1], 0.0);
  const auto at_saddle = oracle::jacobi_eigenvalues(
      to_mat(aggregated_hessian(paper(), Eigen::Vector2d(-7.4336, 1.3959))));
  EXPECT_LT(at_saddle[0], 0.0);
  EXPECT_GT(at_saddle[1], 0.0);
}

TEST(Estimation, HessianAgainstFiniteDifferences) {
  const Eigen::Vector2d t(1.0, 1.0);
  const Eigen::MatrixXd a = aggregated_hessian(paper(), t);
  // Independent FD of the library gradient, step 1e-4.
  Eigen::MatrixXd fd(2, 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d up = t, down = t;
    up(c) += 1e-4;
    down(c) -= 1e-4;
    fd.col(c) = (aggregated_gradient(paper(), up) - aggregated_gradient(paper(), down)) / 2e-4;
  }
  EXPECT_LE((a - fd).cwiseAbs().maxCoeff(), 1e-4);
  const Eigen::MatrixXd lib_fd = aggregated_hessian(paper(), t, HessianMode::kFiniteDifference, 1e-4);
  EXPECT_LE((a - lib_fd).cwiseAbs().maxCoeff(), 1e-4);
  // Derived closed form: 2 M^T M + 3 kappa (||t|| I + t t^T / ||t||).
  Eigen::Matrix2d ref;
  const double n = std::sqrt(2.0);
  ref << 2.0 - 0.3 * (n + 1.0 / n), -0.3 / n, -0.3 / n, 8.0 - 0.3 * (n + 1.0 / n);
  EXPECT_LE((a - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Estimation, HessianSingularAtOrigin) {
  try {
    paper().analytic_hessian(0, std::vector<double>{0.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularPoint);
  }
}

TEST(Estimation, Classification) {
  EXPECT_EQ(classify_stationary_point(paper(), Eigen::Vector2d(1.3478, 1.0690), 1e-2, 1e-6),
            PointKind::kMinimum);
  EXPECT_EQ(classify_stationary_point(paper(), Eigen::Vector2d(-7.4336, 1.3959), 1e-2, 1e-6),
            PointKind::kStrictSaddle);
  EXPECT_EQ(classify_stationary_point(paper(), Eigen::Vector2d(0.0, 0.0), 1e-2, 1e-6),
            PointKind::kNotStationary);
}

TEST(Estimation, ContinuousAcrossBoundary) {
  const auto& p = paper();
  oracle::Gen g(31);
  std::vector<std::vector<double>> points;
  for (int t = 0; t < 50; ++t) {
    const double y = g.uniform(-3, 3), x = g.uniform(-8, 4);
    points.push_back({-8.0, y});
    points.push_back({4.0, y});
    points.push_back({x, -3.0});
    points.push_back({x, 3.0});
  }
  for (const auto& b : points) {
    for (int axis = 0; axis < 2; ++axis) {
      std::vector<double> in = b, out = b;
      const bool on_axis = (axis == 0) ? (b[0] == -8.0 || b[0] == 4.0) : (b[1] == -3.0 || b[1] == 3.0);
      if (!on_axis) continue;
      const double outward = (b[axis] > 0) ? 1.0 : -1.0;
      in[axis] -= outward * 1e-7;
      out[axis] += outward * 1e-7;
      for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(p.objective(i, in), p.objective(i, out), 1e-5);
        std::vector<double> gi(2), go(2);
        p.gradient(i, in, gi);
        p.gradient(i, out, go);
        EXPECT_NEAR(gi[0], go[0], 1e-5);
        EXPECT_NEAR(gi[1], go[1], 1e-5);
      }
    }
  }
}

TEST(Estimation, ExtensionGrowsLinearlyFarOut) {
  const auto& p = paper();
  // Beyond the ramp radius the slope along the outward normal is the ramp slope.
  const double c = p.ramp_slope();
  EXPECT_GT(c, 0.0);
  const std::vector<double> a{4.0 + 2.0, 0.5}, b{4.0 + 3.0, 0.5};
  EXPECT_NEAR(p.objective(0, b) - p.objective(0, a), c, 1e-9);
}

TEST(Ica, SampleCountsAndSources) {
  auto p = make_ica_problem(10, 5, 160, 7);
  std::size_t total = 0;
  const Eigen::MatrixXd& a = p->mixing();
  EXPECT_LE((a.transpose() * a - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
  double fourth = 0.0;
  std::size_t entries = 0;
  for (std::size_t i = 0; i < p->agents(); ++i) {
    total += p->samples_per_agent(i);
    for (std::size_t s = 0; s < p->samples_per_agent(i); ++s) {
      const Eigen::VectorXd z = a.transpose() * p->sample(i, s);
      for (Eigen::Index c = 0; c < z.size(); ++c) {
        EXPECT_NEAR(std::abs(z(c)), 1.0, 1e-12);
        const double r = std::round(z(c));
        fourth += r * r * r * r;
        ++entries;
      }
    }
  }
  EXPECT_EQ(total, 800u);
  EXPECT_EQ(fourth / static_cast<double>(entries), 1.0);
  EXPECT_EQ(p->sign_factor(), 1.0);
}

TEST(Ica, ReconstructionError) {
  auto p = make_ica_problem(4, 5, 40, 3);
  const Eigen::VectorXd a1 = p->mixing().col(0);
  EXPECT_NEAR(ica_reconstruction_error(*p, a1), 0.0, 1e-15);
  EXPECT_NEAR(ica_reconstruction_error(*p, -a1), 0.0, 1e-15);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.5);
  EXPECT_NEAR(ica_reconstruction_error(Eigen::MatrixXd::Identity(4, 4), u), 1.0, 1e-15);
  try {
    ica_reconstruction_error(*p, 2.0 * a1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotUnitNorm);
  }
}

TEST(Ica, SignInvariance) {
  auto p = make_ica_problem(4, 5, 160, 1);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> u(4), v(4);
    p->sample_initial(rng, u);
    for (int c = 0; c < 4; ++c) v[c] = -u[c];
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(p->objective(i, u), p->objective(i, v));
  }
}

TEST(Ica, ColumnIsMinimumAndUniformPointIsMaximum) {
  auto p = make_ica_problem(4, 5, 160, 1);
  bool saw_max = false, saw_min = false;
  for (const auto& kp : p->known_points()) {
    EXPECT_EQ(classify_stationary_point(*p, kp.coords, 1e-6, 1e-6), kp.expected) << kp.label;
    saw_max |= kp.expected == PointKind::kMaximum;
    saw_min |= kp.expected == PointKind::kMinimum;
  }
  EXPECT_TRUE(saw_max);
  EXPECT_TRUE(saw_min);
  // The population objective is 3 - 2 sum c_j^4 for Rademacher sources, so
  // the equal-weight point sits at the top.
  const Eigen::VectorXd s = p->population_saddle();
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
  EXPECT_NEAR(ica_reconstruction_error(*p, s), std::sqrt(2.0 - 2.0 / 2.0), 1e-12);
}

TEST(Quadratic, SyntheticSaddle) {
  QuadraticProblem q(Eigen::Vector2d(1.0, -1.0), {Eigen::Vector2d::Zero()});
  EXPECT_EQ(classify_stationary_point(q, Eigen::Vector2d::Zero(), 1e-8, 1e-6),
            PointKind::kStrictSaddle);
  QuadraticProblem bowl(Eigen::Vector2d(1.0, 2.0), {Eigen::Vector2d::Zero()});
  EXPECT_EQ(classify_stationary_point(bowl, Eigen::Vector2d::Zero(), 1e-8, 1e-6),
            PointKind::kMinimum);
  QuadraticProblem cap(Eigen::Vector2d(-1.0, -2.0), {Eigen::Vector2d::Zero()});
  EXPECT_EQ(classify_stationary_point(cap, Eigen::Vector2d::Zero(), 1e-8, 1e-6),
            PointKind::kMaximum);
  QuadraticProblem flat(Eigen::Vector2d(1.0, 0.0), {Eigen::Vector2d::Zero()});
  EXPECT_EQ(classify_stationary_point(flat, Eigen::Vector2d::Zero(), 1e-8, 1e-6),
            PointKind::kDegenerate);
}

TEST(Problems, DimensionMismatch) {
  try {
    agent_gradient(paper(), 0, Eigen::Vector3d::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    agent_gradient(paper(), 5, Eigen::Vector2d::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

namespace {

// Relative gap between the gradient and central differences of the
// objective (tangential part on the sphere).
double fd_gap(const Problem& p, std::size_t agent, const std::vector<double>& x) {
  std::vector<double> g(p.dim());
  p.gradient(agent, x, g);
  auto fd = oracle::fd_gradient(
      [&](const std::vector<double>& y) { return p.objective(agent, y); }, x, 1e-6);
  if (p.on_unit_sphere()) {
    double r = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) r += x[c] * fd[c];
    for (std::size_t c = 0; c < x.size(); ++c) fd[c] -= r * x[c];
  }
  std::vector<double> diff(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) diff[c] = g[c] - fd[c];
  return oracle::norm(diff) / std::max(1.0, oracle::norm(fd));
}

}  // namespace

TEST(Property, GradientConsistency) {
  oracle::Gen g(40);
  std::mt19937_64 rng(41);
  auto ica = make_ica_problem(4, 5, 160, 1);
  QuadraticProblem quad(Eigen::Vector3d(1.5, -0.5, 2.0),
                        {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 2, -1)});
  for (int t = 0; t < 100; ++t) {
    // The estimation sample covers the box and a margin beyond it.
    const std::vector<double> x{g.uniform(-9.5, 5.5), g.uniform(-4.5, 4.5)};
    const std::size_t agent = g.index(0, 4);
    EXPECT_LE(fd_gap(paper(), agent, x), 1e-5) << x[0] << "," << x[1];

    std::vector<double> u(4);
    ica->sample_initial(rng, u);
    EXPECT_LE(fd_gap(*ica, agent, u), 1e-5);

    const std::vector<double> q{g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5)};
    EXPECT_LE(fd_gap(quad, g.index(0, 1), q), 1e-5);
  }
}

TEST(Property, HessianSymmetry) {
  oracle::Gen g(42);
  auto ica = make_ica_problem(4, 5, 160, 1);
  std::mt19937_64 rng(43);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector2d x(g.uniform(-8, 4), g.uniform(-3, 3));
    const Eigen::MatrixXd h = aggregated_hessian(paper(), x);
    EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::VectorXd u(4);
    ica->sample_initial(rng, {u.data(), 4});
    const Eigen::MatrixXd hi = aggregated_hessian(*ica, u);
    EXPECT_LE((hi - hi.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Property, ConstantsPositive) {
  const auto& c = paper().constants();
  EXPECT_GT(c.nu, 0.0);
  EXPECT_GT(c.rho, 0.0);
  EXPECT_GT(c.gradient_bound, 0.0);
  for (auto n : c.samples_per_agent) EXPECT_GE(n, 1u);
  for (const auto& kp : paper().known_points()) {
    EXPECT_EQ(kp.coords.size(), 2);
    EXPECT_TRUE(kp.coords.allFinite());
  }
}
