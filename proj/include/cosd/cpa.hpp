#pragma once

// Collaboration propagation over the heterogeneous topic graph.
//
// Row-vector convention: a node embedding is a row, weights are d_in x d_out,
// so the per-node message W1 e_i reads e_i * W1 here. One layer is
//
//   E' = LReLU( (I + L) E W1 + (E . L E) W2 )
//
// where "." is the elementwise product. Per node this is the self term
// e W1 plus, for every neighbour i, L_ei (e_i W1 + (e . e_i) W2) with
// L_ei = w_ei / sqrt(d_e d_i).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cosd/numerics.hpp"
#include "cosd/sparse.hpp"

namespace cosd {

struct CpaDims {
  std::size_t d0 = 768;
  std::size_t d1 = 64;
  std::size_t hops = 3;

  std::size_t final_dim() const { return d0 + hops * d1; }
};

// E = [V; U; Z] stacked as text rows, then 3H topic rows, then 3 label rows.
struct EmbeddingTable {
  Parameter table;
  std::size_t n_text = 0;
  std::size_t n_topic = 0;

  std::size_t n_label() const { return 3; }
  std::size_t rows() const { return n_text + n_topic + n_label(); }
  std::size_t dim() const { return table.value.cols(); }
  std::size_t topic_offset() const { return n_text; }
  std::size_t label_offset() const { return n_text + n_topic; }

  Tensor text_block() const { return slice_rows(table.value, 0, n_text); }
  Tensor topic_block() const { return slice_rows(table.value, topic_offset(), n_topic); }
  Tensor label_block() const { return slice_rows(table.value, label_offset(), n_label()); }
};

EmbeddingTable make_embedding_table(const Tensor& text_init, const Tensor& topic_init,
                                    const Tensor& label_init);

struct CpaWeights {
  std::vector<Parameter> w1;
  std::vector<Parameter> w2;

  std::size_t hops() const { return w1.size(); }
};

// Xavier-initialized W1^k, W2^k: d0 x d1 for the first hop, d1 x d1 after.
CpaWeights make_weights(const CpaDims& dims, std::uint64_t seed);

struct CpaModel {
  EmbeddingTable embeddings;
  CpaWeights weights;
  CpaDims dims;
  std::size_t topics_per_stance = 0;
  double slope = kDefaultLeakySlope;

  std::vector<Parameter*> embedding_params() { return {&embeddings.table}; }
  std::vector<Parameter*> weight_params();

  // CPA1 layout, little-endian:
  //   "CPA1" | u32 d0 | u32 d1 | u32 hops | u32 H | u32 n_text
  //   | E rows*d0 f64 | W1[1..hops] f64 | W2[1..hops] f64   (all row-major)
  void save(const std::filesystem::path& path) const;
  static CpaModel load(const std::filesystem::path& path, double slope = kDefaultLeakySlope);
};

struct Propagation {
  std::vector<Var> layers;  // E^1 .. E^hops
  // Smallest |pre-activation| seen; finite-difference checks need it away from 0.
  double min_abs_preactivation = 0.0;
};

Propagation propagate(Var e0, const SparseMatrix& lap, std::span<const Var> w1,
                      std::span<const Var> w2, double slope = kDefaultLeakySlope);

// [E^0, E^1, ..., E^hops] column-concatenated per node.
Var final_reps(Var e0, std::span<const Var> layers);

// Untracked propagate + final_reps with the model's own embeddings.
Tensor frozen_final_reps(const CpaModel& model, const SparseMatrix& lap);

// Single-node message from neighbour e_i into e (rows as vectors, weights d_in x d_out).
std::vector<double> one_hop_message(std::span<const double> e, std::span<const double> e_i,
                                    double deg_e, double deg_ei, const Tensor& w1,
                                    const Tensor& w2);

// Graph-free transform: e^k = LReLU(e^{k-1} W1^k + e^{k-1} W2^k), then
// concatenated [x, e^1, ..., e^hops]. x is n x d0.
Tensor infer_transform(const Tensor& x, const CpaWeights& weights,
                       double slope = kDefaultLeakySlope);

}  // namespace cosd
