#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosd/corpus.hpp"
#include "cosd/cpa.hpp"
#include "cosd/encoder.hpp"
#include "cosd/graph.hpp"
#include "cosd/training.hpp"

namespace cosd {

using StanceScores = std::array<double, kNumStances>;

struct ScoreBundle {
  StanceScores sem{};
  StanceScores dis{};
  StanceScores total{};
  Stance predicted = Stance::Favor;
};

enum class ScoreMode { Full, NoSem, NoDis };
enum class ScoreNorm { None, ZScore };

std::optional<ScoreMode> parse_score_mode(std::string_view s);
std::optional<ScoreNorm> parse_score_norm(std::string_view s);
std::string_view to_string(ScoreMode m);

// Inner products of e_sem with the three label rows.
StanceScores semantic_score(std::span<const double> e_sem, const Tensor& z_table);
// Dis-weighted sum of topic rows.
std::vector<double> distributed_rep(std::span<const double> dis, const Tensor& u_table);
// Per stance block, the best inner product between the transformed
// distribution representation and the block's transformed topic rows.
StanceScores distributed_score(std::span<const double> dis, const Tensor& u_table,
                               const CpaWeights& weights, double slope = kDefaultLeakySlope);

// Highest total wins; ties go to the earlier label (Favor, None, Against).
Stance argmax_stance(const StanceScores& total);
ScoreBundle combine(const StanceScores& sem, const StanceScores& dis, ScoreMode mode,
                    ScoreNorm norm = ScoreNorm::None);

// Frozen per-partition scorer; transformed topic rows are computed once.
class Predictor {
 public:
  Predictor(const TargetModel& model, const EncoderStore& store, std::size_t fold_in_sweeps,
            std::uint64_t seed);

  ScoreBundle score(const Example& ex, ScoreMode mode = ScoreMode::Full,
                    ScoreNorm norm = ScoreNorm::None) const;
  ScoreBundle score(std::span<const double> e_sem, std::span<const double> dis,
                    ScoreMode mode = ScoreMode::Full, ScoreNorm norm = ScoreNorm::None) const;

  const TargetModel& model() const { return *model_; }

 private:
  const TargetModel* model_;
  const EncoderStore* store_;
  std::size_t fold_in_sweeps_;
  std::uint64_t seed_;
  Tensor z_;
  Tensor u_tilde_;
};

ScoreBundle predict(const Example& ex, const EncoderStore& store, const StanceModel& model,
                    ScoreMode mode = ScoreMode::Full, ScoreNorm norm = ScoreNorm::None);

// Scores every example with one Predictor per partition.
std::vector<ScoreBundle> predict_all(std::span<const Example* const> examples,
                                     const EncoderStore& store, const StanceModel& model,
                                     ScoreMode mode = ScoreMode::Full,
                                     ScoreNorm norm = ScoreNorm::None);

// Training graph of a partition, rebuilt from its stored training ids.
HeteroTopicGraph rebuild_graph(const TargetModel& part, const Dataset& ds,
                               const TrainConfig& config);

struct Neighbour {
  std::string id;
  double similarity = 0.0;
};

// Cosine ranking of `reps` rows (first ids.size() rows) against `query`,
// skipping `exclude_id`; ties keep row order. Throws when k exceeds the candidates.
std::vector<Neighbour> rank_neighbours(std::span<const double> query, const Tensor& reps,
                                       std::span<const std::string> ids, std::size_t k,
                                       std::string_view exclude_id = {});

// Training texts whose final representations are most cosine-similar to the
// query. A training query uses its own final representation and is excluded;
// any other text uses the graph-free transform of its pooled vector.
std::vector<Neighbour> top_k_similar(const Example& ex, std::size_t k, const EncoderStore& store,
                                     const StanceModel& model, const Dataset& ds);

// CSV "token,attention_weight", one row per encoder token.
void export_attention(const Example& ex, const EncoderStore& store,
                      const std::filesystem::path& path);

}  // namespace cosd
