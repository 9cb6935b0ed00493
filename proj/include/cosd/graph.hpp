#pragma once

#include <span>
#include <vector>

#include "cosd/common.hpp"
#include "cosd/corpus.hpp"
#include "cosd/sparse.hpp"
#include "cosd/topics.hpp"

namespace cosd {

// m1 weights below this are dropped (and the row renormalized).
inline constexpr double kEdgePruneThreshold = 1e-6;

struct Adjacency {
  SparseMatrix m1;  // n_text x 3H, row i = Dis_i
  SparseMatrix m2;  // n_text x 3, one-hot stance
  SparseMatrix m;   // [m1 | m2]
};

// Node order everywhere: texts, then 3H topics, then the 3 labels.
struct HeteroTopicGraph {
  Adjacency adjacency;
  SparseMatrix lap;
  std::size_t n_text = 0;
  std::size_t n_topic = 0;

  std::size_t n_label() const { return kNumStances; }
  std::size_t node_count() const { return n_text + n_topic + kNumStances; }
  std::size_t topic_offset() const { return n_text; }
  std::size_t label_offset() const { return n_text + n_topic; }
};

Adjacency build_adjacency(std::span<const Example* const> train,
                          std::span<const TopicDistribution> dis);

// D^-1/2 [[0, M], [M^T, 0]] D^-1/2 with zero-degree rows and columns left empty.
SparseMatrix laplacian(const SparseMatrix& m);

HeteroTopicGraph build_graph(std::span<const Example* const> train,
                             std::span<const TopicDistribution> dis);

// Inverted edge dropout on stored entries plus node dropout (row and column
// zeroed). Returns a fresh matrix; `lap` is untouched.
SparseMatrix dropout_graph(const SparseMatrix& lap, double node_rate, double edge_rate, Rng& rng);

}  // namespace cosd
