#include "cosd/graph.hpp"

#include <cmath>

namespace cosd {

Adjacency build_adjacency(std::span<const Example* const> train,
                          std::span<const TopicDistribution> dis) {
  if (train.size() != dis.size()) {
    throw ShapeError("build_adjacency: " + std::to_string(train.size()) + " texts but " +
                     std::to_string(dis.size()) + " distributions");
  }
  const std::size_t n = train.size();
  const std::size_t width = n ? dis[0].values.size() : 0;
  std::vector<Triplet> e1, e2, e;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = dis[i].values;
    if (d.size() != width || width % kNumStances != 0) {
      throw ShapeError("build_adjacency: inconsistent distribution width");
    }
    if (train[i]->stance == Stance::Unknown) {
      throw Error("build_adjacency: training text " + train[i]->id + " has no stance");
    }
    double kept = 0.0;
    for (double v : d) {
      if (v >= kEdgePruneThreshold) kept += v;
    }
    for (std::size_t j = 0; j < width; ++j) {
      if (d[j] < kEdgePruneThreshold) continue;
      const double w = d[j] / kept;
      e1.push_back({i, j, w});
      e.push_back({i, j, w});
    }
    const std::size_t label = index_of(train[i]->stance);
    e2.push_back({i, label, 1.0});
    e.push_back({i, width + label, 1.0});
  }
  return Adjacency{SparseMatrix::from_triplets(n, width, std::move(e1)),
                   SparseMatrix::from_triplets(n, kNumStances, std::move(e2)),
                   SparseMatrix::from_triplets(n, width + kNumStances, std::move(e))};
}

SparseMatrix laplacian(const SparseMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t total = m.rows() + m.cols();
  std::vector<double> degree(total, 0.0);
  for (const auto& t : m.triplets()) {
    if (t.value < 0.0) throw Error("laplacian: negative edge weight");
    degree[t.row] += t.value;
    degree[n + t.col] += t.value;
  }
  auto inv_sqrt = [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; };
  std::vector<Triplet> entries;
  entries.reserve(2 * m.nnz());
  for (const auto& t : m.triplets()) {
    if (t.value == 0.0) continue;
    const std::size_t a = t.row, b = n + t.col;
    const double w = t.value * inv_sqrt(degree[a]) * inv_sqrt(degree[b]);
    entries.push_back({a, b, w});
    entries.push_back({b, a, w});
  }
  return SparseMatrix::from_triplets(total, total, std::move(entries));
}

HeteroTopicGraph build_graph(std::span<const Example* const> train,
                             std::span<const TopicDistribution> dis) {
  HeteroTopicGraph g;
  g.adjacency = build_adjacency(train, dis);
  g.lap = laplacian(g.adjacency.m);
  g.n_text = train.size();
  g.n_topic = g.adjacency.m1.cols();
  return g;
}

SparseMatrix dropout_graph(const SparseMatrix& lap, double node_rate, double edge_rate, Rng& rng) {
  if (!(node_rate >= 0.0 && node_rate < 1.0) || !(edge_rate >= 0.0 && edge_rate < 1.0)) {
    throw Error("dropout rates must lie in [0, 1)");
  }
  if (node_rate == 0.0 && edge_rate == 0.0) return lap;
  std::vector<bool> dropped(lap.rows(), false);
  if (node_rate > 0.0) {
    for (std::size_t i = 0; i < dropped.size(); ++i) dropped[i] = rng.uniform() < node_rate;
  }
  const double keep_scale = 1.0 / (1.0 - edge_rate);
  std::vector<Triplet> kept;
  kept.reserve(lap.nnz());
  for (const auto& t : lap.triplets()) {
    // Draw for every entry so the stream does not depend on node drops.
    const bool edge_kept = edge_rate == 0.0 || rng.uniform() >= edge_rate;
    if (!edge_kept || dropped[t.row] || (t.col < dropped.size() && dropped[t.col])) continue;
    kept.push_back({t.row, t.col, edge_rate == 0.0 ? t.value : t.value * keep_scale});
  }
  return SparseMatrix::from_triplets(lap.rows(), lap.cols(), std::move(kept));
}

}  // namespace cosd
