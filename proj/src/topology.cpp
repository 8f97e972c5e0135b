#include "dpdopt/topology.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <queue>

#include "dpdopt/error.hpp"
#include "dpdopt/kernels.hpp"

namespace dpdopt {

namespace {

// A disconnected or periodic chain has eta == 1 up to rounding.
constexpr double kSpectralGapCeiling = 1.0 - 1e-12;

}  // namespace

Graph::Graph(std::size_t agents, std::vector<Edge> edges) : agents_(agents) {
  if (agents == 0) throw Error(ErrorCode::kInvalidConfig, "graph needs at least one agent");
  for (auto [a, b] : edges) {
    if (a >= agents || b >= agents)
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("edge ({}, {}) outside [0, {})", a, b, agents));
    if (a == b)
      throw Error(ErrorCode::kInvalidConfig, fmt::format("self-loop at agent {}", a));
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(agents_, 0);
  for (auto [a, b] : edges_) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

bool Graph::connected() const {
  std::vector<std::vector<std::size_t>> adjacency(agents_);
  for (auto [a, b] : edges_) {
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }
  std::vector<bool> seen(agents_, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t next : adjacency[v]) {
      if (seen[next]) continue;
      seen[next] = true;
      ++reached;
      frontier.push(next);
    }
  }
  return reached == agents_;
}

Eigen::MatrixXd WeightMatrix::matrix() const {
  Eigen::MatrixXd w(agents_, agents_);
  for (std::size_t i = 0; i < agents_; ++i)
    for (std::size_t j = 0; j < agents_; ++j) w(i, j) = (*this)(i, j);
  return w;
}

WeightMatrix build_metropolis_weights(const Graph& graph) {
  if (!graph.connected())
    throw Error(ErrorCode::kDisconnectedGraph,
                fmt::format("{} agents, {} edges", graph.agents(), graph.edges().size()));
  const std::size_t m = graph.agents();
  const auto deg = graph.degrees();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (auto [a, b] : graph.edges()) {
    const double weight = 1.0 / (1.0 + static_cast<double>(std::max(deg[a], deg[b])));
    w(a, b) = weight;
    w(b, a) = weight;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
    if (!(w(i, i) > 0.0))
      throw Error(ErrorCode::kDegenerateWeights,
                  fmt::format("w[{0}][{0}] = {1}", i, w(i, i)));
  }
  return validate_weight_matrix(w);
}

double spectral_gap(const Eigen::MatrixXd& w) {
  const auto m = w.rows();
  const Eigen::MatrixXd centered =
      w - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  return svd.singularValues().size() == 0 ? 0.0 : svd.singularValues()(0);
}

WeightMatrix validate_weight_matrix(const Eigen::MatrixXd& raw) {
  if (raw.rows() != raw.cols() || raw.rows() == 0)
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("weight matrix is {}x{}", raw.rows(), raw.cols()));
  if (!raw.allFinite())
    throw Error(ErrorCode::kNotStochastic, "weight matrix has non-finite entries");
  const auto m = static_cast<std::size_t>(raw.rows());

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (std::abs(raw(i, j) - raw(j, i)) > kStochasticTolerance)
        throw Error(ErrorCode::kNotSymmetric,
                    fmt::format("w[{0}][{1}] = {2} but w[{1}][{0}] = {3}", i, j,
                                raw(i, j), raw(j, i)));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (raw(i, j) < 0.0)
        throw Error(ErrorCode::kNegativeEntry,
                    fmt::format("w[{}][{}] = {}", i, j, raw(i, j)));
  for (std::size_t i = 0; i < m; ++i)
    if (!(raw(i, i) > 0.0))
      throw Error(ErrorCode::kZeroSelfWeight, fmt::format("w[{0}][{0}] = 0", i));
  for (std::size_t i = 0; i < m; ++i) {
    const double row = raw.row(i).sum();
    const double col = raw.col(i).sum();
    if (std::abs(row - 1.0) > kStochasticTolerance ||
        std::abs(col - 1.0) > kStochasticTolerance)
      throw Error(ErrorCode::kNotStochastic,
                  fmt::format("row/column {} sums to {:.17g}/{:.17g}", i, row, col));
  }

  const double eta = spectral_gap(raw);
  if (!(eta < kSpectralGapCeiling))
    throw Error(ErrorCode::kSpectralGapViolation,
                fmt::format("eta = {:.17g} (need eta < 1)", eta));

  std::vector<double> entries(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) entries[i * m + j] = raw(i, j);
  return WeightMatrix(m, std::move(entries), eta);
}

WeightMatrix validate_weight_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t m = rows.size();
  Eigen::MatrixXd raw(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != m)
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("row {} has {} entries, expected {}", i, rows[i].size(), m));
    for (std::size_t j = 0; j < m; ++j) raw(i, j) = rows[i][j];
  }
  return validate_weight_matrix(raw);
}

Graph builtin_topology(std::string_view name, std::size_t agents) {
  std::vector<Graph::Edge> edges;
  const std::size_t m = agents;
  if (name == "complete") {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) edges.emplace_back(i, j);
  } else if (name == "path") {
    for (std::size_t i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
  } else if (name == "ring" || name == "ring_plus_chord") {
    if (m >= 2)
      for (std::size_t i = 0; i < m; ++i) edges.emplace_back(i, (i + 1) % m);
    if (name == "ring_plus_chord" && m / 2 != 0) edges.emplace_back(0, m / 2);
  } else {
    throw Error(ErrorCode::kUnknownTopology, std::string(name));
  }
  return Graph(agents, std::move(edges));
}

void apply_mixing(const WeightMatrix& w, std::span<const double> x,
                  std::span<double> out) {
  const std::size_t m = w.agents();
  if (x.size() % m != 0 || out.size() != x.size())
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("state of {} values for {} agents", x.size(), m));
  kernels::mix(w.entries(), m, x, out);
}

}  // namespace dpdopt
