#pragma once

// Communication graphs and the mixing matrices built on them.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dpdopt {

// Absolute tolerance on row/column sums and on symmetry.
inline constexpr double kStochasticTolerance = 1e-12;

// Undirected simple graph on agents 0..m-1. Edges are stored once, as
// (low, high), sorted; self-influence is implicit in the weights.
class Graph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  // Throws Error(kInvalidConfig) on self-loops or out-of-range endpoints.
  // Duplicate and reversed edges collapse.
  Graph(std::size_t agents, std::vector<Edge> edges);

  std::size_t agents() const { return agents_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<std::size_t> degrees() const;
  bool connected() const;

 private:
  std::size_t agents_;
  std::vector<Edge> edges_;
};

// Validated symmetric doubly-stochastic mixing matrix with its cached
// spectral gap eta = ||W - 11^T/m||_2 < 1.
class WeightMatrix {
 public:
  std::size_t agents() const { return agents_; }
  double eta() const { return eta_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * agents_ + j];
  }
  // Row-major m*m entries.
  std::span<const double> entries() const { return entries_; }
  Eigen::MatrixXd matrix() const;

 private:
  friend WeightMatrix validate_weight_matrix(const Eigen::MatrixXd& raw);
  WeightMatrix(std::size_t agents, std::vector<double> entries, double eta)
      : agents_(agents), entries_(std::move(entries)), eta_(eta) {}

  std::size_t agents_;
  std::vector<double> entries_;
  double eta_;
};

// Metropolis-Hastings weights: w_ij = 1 / (1 + max(deg_i, deg_j)) on edges,
// w_ii = 1 - sum_{j != i} w_ij. Throws kDisconnectedGraph or
// kDegenerateWeights.
WeightMatrix build_metropolis_weights(const Graph& graph);

// Largest singular value of W - 11^T/m.
double spectral_gap(const Eigen::MatrixXd& w);
inline double spectral_gap(const WeightMatrix& w) { return spectral_gap(w.matrix()); }

// Checks, in order: square shape (kDimensionMismatch), symmetry
// (kNotSymmetric), nonnegativity (kNegativeEntry), positive diagonal
// (kZeroSelfWeight), unit row/column sums (kNotStochastic), eta < 1
// (kSpectralGapViolation).
WeightMatrix validate_weight_matrix(const Eigen::MatrixXd& raw);
WeightMatrix validate_weight_matrix(const std::vector<std::vector<double>>& rows);

// complete | ring | path | ring_plus_chord (ring plus edge (0, m/2)).
// Throws kUnknownTopology.
Graph builtin_topology(std::string_view name, std::size_t agents);

// out = (W (x) I_d) x for a stacked m x d row-major state.
void apply_mixing(const WeightMatrix& w, std::span<const double> x,
                  std::span<double> out);

}  // namespace dpdopt
