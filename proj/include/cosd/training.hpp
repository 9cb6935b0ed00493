#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cosd/corpus.hpp"
#include "cosd/cpa.hpp"
#include "cosd/encoder.hpp"
#include "cosd/eval.hpp"
#include "cosd/graph.hpp"
#include "cosd/numerics.hpp"
#include "cosd/topics.hpp"

namespace cosd {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  double lr_cpa = 1e-5;
  double lr_embed = 1e-4;
  double dropout = 0.1;
  std::size_t hops = 3;
  std::size_t topics = 5;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = kEncoderDim;
  double lda_alpha = 0.0;  // <= 0 means 50 / topics
  double lda_beta = 0.01;
  std::size_t lda_sweeps = 200;
  std::size_t fold_in_sweeps = kDefaultFoldInSweeps;
  double leaky_slope = kDefaultLeakySlope;
  bool joint = false;
  std::uint64_t seed = 42;
  std::size_t trials = 3;

  // Throws Error on out-of-range values.
  void validate() const;
  LdaParams lda_params(std::uint64_t seed) const;
  CpaDims dims() const { return {embed_dim, hidden_dim, hops}; }
};

// Key used for the single partition of joint mode.
inline constexpr std::string_view kJointKey = "*";

// Target-attended dot-product attention weights: softmax over tokens of
// <target, token_t> / sqrt(dim).
std::vector<double> attention_weights(const Tensor& tokens, std::span<const double> target);
// Attention-weighted sum of the token rows.
std::vector<double> semantic_rep(const Tensor& tokens, std::span<const double> target);
// semantic_rep for a stored example and its target record.
std::vector<double> semantic_rep(const EncoderStore& store, const Example& ex);

// Mean over negatives of -log sigmoid(<v, z_pos> - <v, z_neg>).
double loss_contrastive(std::span<const double> v, std::span<const double> z_pos,
                        std::span<const std::span<const double>> z_negs);
// 1 - cos(e_sem, v).
double loss_cosine(std::span<const double> e_sem, std::span<const double> v);

// Tracked batch objective: contrastive term over each text's two non-gold
// labels plus the batch-mean cosine term. `reps` are final representations of
// every node, `e0` the embedding table leaf.
struct BatchLoss {
  Var total;
  Var contrastive;
  Var cosine;
};
BatchLoss batch_loss(Var reps, Var e0, std::span<const std::size_t> text_rows,
                     std::span<const Stance> labels, std::size_t label_offset,
                     const Tensor& e_sem_rows);

struct TargetModel {
  std::string key;  // target name, or kJointKey
  TopicModelTriple triple;
  CpaModel cpa;
  std::vector<std::string> train_ids;
};

struct StanceModel {
  std::vector<TargetModel> parts;
  bool joint = false;
  TrainConfig config;

  // Partition serving `target` (the joint one in joint mode).
  const TargetModel& for_target(std::string_view target) const;
  // Writes model.json, cpa_<i>.bin and lda_<i>_<favor|none|against>.bin (+ .json summaries).
  void save(const std::filesystem::path& dir) const;
  static StanceModel load(const std::filesystem::path& dir);
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_macro = 0.0;
  double val_micro = 0.0;
};

struct TrialResult {
  std::uint64_t seed = 0;
  StanceModel model;  // best-validation snapshot
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// One topic triple per target (or one under kJointKey).
using TopicTriples = std::map<std::string, TopicModelTriple, std::less<>>;
TopicTriples fit_topic_triples(const Dataset& ds, const TrainConfig& config, std::uint64_t seed);

// Training partition: the texts, topic distributions and graph of one model.
struct Partition {
  std::string key;
  std::vector<const Example*> train;
  std::vector<TopicDistribution> dis;
  HeteroTopicGraph graph;
  Tensor e_sem;  // semantic reps of `train`, row per text
};
Partition build_partition(std::string key, std::vector<const Example*> train,
                          const TopicModelTriple& triple, const EncoderStore& store,
                          const TrainConfig& config);
// Initial CPA model: V from pooled text vectors, U Xavier, Z from label records.
CpaModel init_cpa(const Partition& part, const EncoderStore& store, const TrainConfig& config,
                  std::uint64_t seed);

using EpochCallback = std::function<void(const EpochLog&)>;

// Requires embeddings for every train/val example; throws NumericError with
// the epoch and partition when the loss stops being finite.
TrialResult train(const Dataset& ds, const EncoderStore& store, const TopicTriples& triples,
                  const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial);

}  // namespace cosd
