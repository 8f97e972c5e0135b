#pragma once

// Reference computations the library code is checked against. Nothing here
// calls into dpdopt except for the Problem interface used by the
// finite-difference helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "dpdopt/problems.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

// Cyclic Jacobi rotations; returns eigenvalues of a symmetric matrix, ascending.
inline std::vector<double> jacobi_eigenvalues(Mat a, std::vector<std::vector<double>>* vecs = nullptr) {
  const std::size_t n = a.size();
  Mat v = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] < a[y][y]; });
  std::vector<double> out;
  for (auto i : order) out.push_back(a[i][i]);
  if (vecs) {
    vecs->clear();
    for (auto i : order) {
      std::vector<double> col(n);
      for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
      vecs->push_back(col);
    }
  }
  return out;
}

// ||W - J/m||_2 for symmetric W via Jacobi.
inline double spectral_gap(const Mat& w) {
  const std::size_t m = w.size();
  Mat a = w;
  for (auto& row : a)
    for (double& x : row) x -= 1.0 / static_cast<double>(m);
  double best = 0.0;
  for (double e : jacobi_eigenvalues(a)) best = std::max(best, std::abs(e));
  return best;
}

// Power iteration on (W - J/m)^2; an independent estimate of the same norm.
inline double spectral_gap_power(const Mat& w, int iters = 20000) {
  const std::size_t m = w.size();
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 + 0.37 * static_cast<double>(i * i % 7);
  auto apply = [&](const std::vector<double>& x) {
    std::vector<double> y(m, 0.0);
    double mean = 0.0;
    for (double e : x) mean += e;
    mean /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) y[i] += w[i][j] * x[j];
      y[i] -= mean;
    }
    return y;
  };
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> y = apply(apply(v));
    double n = 0.0;
    for (double e : y) n += e * e;
    n = std::sqrt(n);
    if (n == 0.0) return 0.0;
    for (auto& e : y) e /= n;
    v = y;
    lambda = n;
  }
  return std::sqrt(lambda);
}

// Dense (W (x) I_d) applied to a stacked vector.
inline std::vector<double> kron_apply(const Mat& w, std::size_t d, const std::vector<double>& x) {
  const std::size_t n = w.size() * d;
  Mat big = zeros(n, n);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j)
      for (std::size_t c = 0; c < d; ++c) big[i * d + c][j * d + c] = w[i][j];
  std::vector<double> y(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) y[r] += big[r][c] * x[c];
  return y;
}

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double keep = x[c];
    x[c] = keep + h;
    const double up = f(x);
    x[c] = keep - h;
    const double down = f(x);
    x[c] = keep;
    g[c] = (up - down) / (2.0 * h);
  }
  return g;
}

// Generic Gaussian mechanism: variance = 2 ln(1.25/delta) S^2 / eps^2.
inline double gaussian_mechanism_variance(double s, double eps, double delta) {
  return 2.0 * std::log(1.25 / delta) * s * s / (eps * eps);
}

inline double consensus_error(const std::vector<double>& x, std::size_t m, std::size_t d) {
  double total = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += x[i * d + c];
    mean /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) total += (x[i * d + c] - mean) * (x[i * d + c] - mean);
  }
  return std::sqrt(total);
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

// Seeded generator for property tests (splitmix64).
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(next() % (hi - lo + 1));
  }

 private:
  std::uint64_t s_;
};

// Newton refinement on the aggregated gradient with an FD Jacobian, written
// independently of the library's refine_stationary_point.
inline Eigen::VectorXd newton_root(const dpdopt::Problem& p, Eigen::VectorXd x, int iters = 50) {
  const Eigen::Index d = x.size();
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd g = dpdopt::aggregated_gradient(p, x);
    if (g.norm() < 1e-14) break;
    Eigen::MatrixXd j(d, d);
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < d; ++c) {
      Eigen::VectorXd a = x, b = x;
      a(c) += h;
      b(c) -= h;
      j.col(c) = (dpdopt::aggregated_gradient(p, a) - dpdopt::aggregated_gradient(p, b)) / (2 * h);
    }
    x -= j.fullPivLu().solve(g);
  }
  return x;
}

}  // namespace oracle
