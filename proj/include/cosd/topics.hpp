#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cosd/common.hpp"
#include "cosd/corpus.hpp"

namespace cosd {

struct LdaParams {
  std::size_t topics = 5;
  // <= 0 selects 50 / topics.
  double alpha = 0.0;
  double beta = 0.01;
  std::size_t sweeps = 200;
  std::uint64_t seed = 42;

  double resolved_alpha() const { return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(topics); }
};

// Topic-word counts of a collapsed Gibbs run. Immutable once trained.
class LdaModel {
 public:
  LdaModel() = default;

  // Builds a model from explicit counts (row-major topics x vocab).
  static LdaModel from_counts(std::size_t topics, double alpha, double beta,
                              std::vector<std::uint32_t> topic_word,
                              std::shared_ptr<const Vocabulary> vocab,
                              std::size_t trained_sweeps = 0);

  std::size_t topics() const { return topics_; }
  std::size_t vocab_size() const { return vocab_ ? vocab_->size() : 0; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::size_t trained_sweeps() const { return trained_sweeps_; }
  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }

  std::uint32_t count(std::size_t topic, std::size_t word) const {
    return topic_word_[topic * vocab_size() + word];
  }
  std::uint64_t topic_total(std::size_t topic) const { return topic_totals_[topic]; }
  std::uint64_t total_tokens() const;
  // No training tokens at all; fold-in then returns the uniform prior.
  bool prior_only() const { return total_tokens() == 0; }

  // Smoothed p(word | topic).
  double phi(std::size_t topic, std::size_t word) const;
  // Word indices of the `n` largest counts in `topic`, ties by index.
  std::vector<std::size_t> top_words(std::size_t topic, std::size_t n) const;

  void save(const std::filesystem::path& path) const;
  static LdaModel load(const std::filesystem::path& path);
  // Human-readable top-10 words per topic.
  void save_summary_json(const std::filesystem::path& path) const;

 private:
  friend class GibbsFitter;

  std::size_t topics_ = 0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<std::uint32_t> topic_word_;
  std::vector<std::uint64_t> topic_totals_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::size_t trained_sweeps_ = 0;
};

// Called after the random initialization (sweep 0) and after every sweep.
// `log_likelihood` is the collapsed joint log p(w, z).
using SweepObserver =
    std::function<void(std::size_t sweep, const LdaModel& model, double log_likelihood)>;

LdaModel fit_lda(const std::vector<std::vector<std::string>>& docs,
                 std::shared_ptr<const Vocabulary> vocab, const LdaParams& params,
                 const SweepObserver& observer = {});
// Vocabulary built from `docs` themselves.
LdaModel fit_lda(const std::vector<std::vector<std::string>>& docs, const LdaParams& params,
                 const SweepObserver& observer = {});

inline constexpr std::size_t kDefaultFoldInSweeps = 50;

// Fold-in Gibbs with frozen topic-word counts; returns (n_h + alpha) / (len + H alpha).
// Out-of-vocabulary tokens are dropped; an empty document gets the uniform prior.
// The chain is seeded from `seed` and the document contents.
std::vector<double> doc_topic_posterior(const LdaModel& model,
                                        const std::vector<std::string>& tokens,
                                        std::size_t fold_in_sweeps = kDefaultFoldInSweeps,
                                        std::uint64_t seed = 0);

struct TopicModelTriple {
  // Favor, None, Against subset models.
  std::array<LdaModel, kNumStances> models;

  std::size_t topics() const { return models[0].topics(); }
  std::size_t width() const { return kNumStances * topics(); }
};

TopicModelTriple fit_triple(const StanceSubsets& subsets, std::shared_ptr<const Vocabulary> vocab,
                            const LdaParams& params);

// 3H entries ordered [favor block, none block, against block]; each block is
// one model's posterior divided by 3, so the vector sums to 1.
struct TopicDistribution {
  std::vector<double> values;
};

TopicDistribution dis_vector(const TopicModelTriple& triple, const std::vector<std::string>& tokens,
                             std::size_t fold_in_sweeps = kDefaultFoldInSweeps,
                             std::uint64_t seed = 0);

double perplexity(const LdaModel& model, const std::vector<std::vector<std::string>>& docs,
                  std::size_t fold_in_sweeps = kDefaultFoldInSweeps, std::uint64_t seed = 0);

// Mean over topics of sum_{i<j} log((D(w_i, w_j) + 1) / D(w_j)) over each topic's
// top_n words, with document co-occurrence counts D taken from `docs`.
// Pairs whose D(w_j) is zero are skipped.
double umass_coherence(const LdaModel& model, const std::vector<std::vector<std::string>>& docs,
                       std::size_t top_n);

}  // namespace cosd
