#include "cosd/topics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "cosd/binio.hpp"

namespace cosd {
namespace {

std::uint64_t doc_seed(std::uint64_t seed, const std::vector<std::size_t>& words) {
  std::uint64_t h = Rng::mix(seed ^ 0x51ed270b27a1f1c3ULL);
  for (std::size_t w : words) h = Rng::mix(h ^ w);
  return h;
}

void check_params(std::size_t topics, double alpha, double beta) {
  if (topics < 1) throw Error("topic count must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error("Dirichlet priors must be positive");
}

std::size_t sample_index(const std::vector<double>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  return weights.size() - 1;
}

}  // namespace

class GibbsFitter {
 public:
  GibbsFitter(std::vector<std::vector<std::size_t>> docs, std::shared_ptr<const Vocabulary> vocab,
              const LdaParams& params)
      : docs_(std::move(docs)), rng_(params.seed) {
    model_.topics_ = params.topics;
    model_.alpha_ = params.resolved_alpha();
    model_.beta_ = params.beta;
    model_.vocab_ = std::move(vocab);
    check_params(model_.topics_, model_.alpha_, model_.beta_);
    const std::size_t h = model_.topics_;
    model_.topic_word_.assign(h * model_.vocab_size(), 0);
    model_.topic_totals_.assign(h, 0);
    doc_topic_.assign(docs_.size() * h, 0);
    assignments_.resize(docs_.size());
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      assignments_[d].resize(docs_[d].size());
      for (std::size_t i = 0; i < docs_[d].size(); ++i) {
        const std::size_t k = rng_.below(h);
        assignments_[d][i] = static_cast<std::uint32_t>(k);
        add(d, docs_[d][i], k, +1);
      }
    }
  }

  void sweep() {
    const std::size_t h = model_.topics_;
    const double vbeta = model_.beta_ * static_cast<double>(model_.vocab_size());
    std::vector<double> weights(h);
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      for (std::size_t i = 0; i < docs_[d].size(); ++i) {
        const std::size_t w = docs_[d][i];
        add(d, w, assignments_[d][i], -1);
        double total = 0.0;
        for (std::size_t k = 0; k < h; ++k) {
          weights[k] = (doc_topic_[d * h + k] + model_.alpha_) *
                       (model_.topic_word_[k * model_.vocab_size() + w] + model_.beta_) /
                       (static_cast<double>(model_.topic_totals_[k]) + vbeta);
          total += weights[k];
        }
        const std::size_t k = sample_index(weights, total, rng_);
        assignments_[d][i] = static_cast<std::uint32_t>(k);
        add(d, w, k, +1);
      }
    }
    ++model_.trained_sweeps_;
  }

  double log_likelihood() const {
    const std::size_t h = model_.topics_;
    const std::size_t v = model_.vocab_size();
    const double a = model_.alpha_, b = model_.beta_;
    double ll = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
      ll += std::lgamma(v * b) - std::lgamma(static_cast<double>(model_.topic_totals_[k]) + v * b);
      for (std::size_t w = 0; w < v; ++w) {
        const std::uint32_t c = model_.topic_word_[k * v + w];
        if (c > 0) ll += std::lgamma(c + b) - std::lgamma(b);
      }
    }
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      ll += std::lgamma(h * a) - std::lgamma(static_cast<double>(docs_[d].size()) + h * a);
      for (std::size_t k = 0; k < h; ++k) {
        const std::uint32_t c = doc_topic_[d * h + k];
        if (c > 0) ll += std::lgamma(c + a) - std::lgamma(a);
      }
    }
    return ll;
  }

  const LdaModel& model() const { return model_; }
  LdaModel take() { return std::move(model_); }

 private:
  void add(std::size_t d, std::size_t w, std::size_t k, int delta) {
    const std::size_t h = model_.topics_;
    doc_topic_[d * h + k] += delta;
    model_.topic_word_[k * model_.vocab_size() + w] += delta;
    model_.topic_totals_[k] += delta;
  }

  LdaModel model_;
  std::vector<std::vector<std::size_t>> docs_;
  std::vector<std::vector<std::uint32_t>> assignments_;
  std::vector<std::uint32_t> doc_topic_;
  Rng rng_;
};

LdaModel LdaModel::from_counts(std::size_t topics, double alpha, double beta,
                               std::vector<std::uint32_t> topic_word,
                               std::shared_ptr<const Vocabulary> vocab,
                               std::size_t trained_sweeps) {
  check_params(topics, alpha, beta);
  if (!vocab) throw Error("model needs a vocabulary");
  if (topic_word.size() != topics * vocab->size()) throw ShapeError("count table size mismatch");
  LdaModel m;
  m.topics_ = topics;
  m.alpha_ = alpha;
  m.beta_ = beta;
  m.vocab_ = std::move(vocab);
  m.topic_word_ = std::move(topic_word);
  m.topic_totals_.assign(topics, 0);
  for (std::size_t k = 0; k < topics; ++k) {
    for (std::size_t w = 0; w < m.vocab_size(); ++w) m.topic_totals_[k] += m.count(k, w);
  }
  m.trained_sweeps_ = trained_sweeps;
  return m;
}

std::uint64_t LdaModel::total_tokens() const {
  return std::accumulate(topic_totals_.begin(), topic_totals_.end(), std::uint64_t{0});
}

double LdaModel::phi(std::size_t topic, std::size_t word) const {
  return (count(topic, word) + beta_) /
         (static_cast<double>(topic_totals_[topic]) + beta_ * static_cast<double>(vocab_size()));
}

std::vector<std::size_t> LdaModel::top_words(std::size_t topic, std::size_t n) const {
  std::vector<std::size_t> idx(vocab_size());
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const auto ca = count(topic, a), cb = count(topic, b);
                      return ca != cb ? ca > cb : a < b;
                    });
  idx.resize(n);
  return idx;
}

// LDA1 layout, little-endian:
//   "LDA1" | u32 H | u32 V | f64 alpha | f64 beta | u32 trained_sweeps
//   | H*V u32 counts (row-major by topic) | V x (u32 byte length, UTF-8 token)
void LdaModel::save(const std::filesystem::path& path) const {
  binio::Writer w(path);
  w.magic("LDA1");
  w.u32(static_cast<std::uint32_t>(topics_));
  w.u32(static_cast<std::uint32_t>(vocab_size()));
  w.f64(alpha_);
  w.f64(beta_);
  w.u32(static_cast<std::uint32_t>(trained_sweeps_));
  for (std::uint32_t c : topic_word_) w.u32(c);
  for (std::size_t i = 0; i < vocab_size(); ++i) {
    const std::string& tok = vocab_->token(i);
    w.u32(static_cast<std::uint32_t>(tok.size()));
    w.bytes(tok);
  }
  w.close();
}

LdaModel LdaModel::load(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic("LDA1");
  const std::size_t h = r.u32();
  const std::size_t v = r.u32();
  const double alpha = r.f64();
  const double beta = r.f64();
  const std::size_t sweeps = r.u32();
  std::vector<std::uint32_t> counts(h * v);
  for (auto& c : counts) c = r.u32();
  std::vector<std::string> tokens(v);
  for (auto& t : tokens) t = r.bytes(r.u32());
  auto vocab = std::make_shared<const Vocabulary>(
      Vocabulary::from_tokens(std::move(tokens), std::vector<std::size_t>(v, 0)));
  return from_counts(h, alpha, beta, std::move(counts), std::move(vocab), sweeps);
}

void LdaModel::save_summary_json(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["topics"] = topics_;
  j["alpha"] = alpha_;
  j["beta"] = beta_;
  j["trained_sweeps"] = trained_sweeps_;
  j["top_words"] = nlohmann::json::array();
  for (std::size_t k = 0; k < topics_; ++k) {
    nlohmann::json words = nlohmann::json::array();
    for (std::size_t w : top_words(k, 10)) {
      words.push_back({{"word", vocab_->token(w)}, {"count", count(k, w)}});
    }
    j["top_words"].push_back(words);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

LdaModel fit_lda(const std::vector<std::vector<std::string>>& docs,
                 std::shared_ptr<const Vocabulary> vocab, const LdaParams& params,
                 const SweepObserver& observer) {
  if (params.sweeps < 1) throw Error("sweeps must be >= 1");
  if (!vocab) throw Error("fit_lda needs a vocabulary");
  std::vector<std::vector<std::size_t>> encoded;
  encoded.reserve(docs.size());
  for (const auto& d : docs) encoded.push_back(vocab->encode(d));
  GibbsFitter fitter(std::move(encoded), std::move(vocab), params);
  if (observer) observer(0, fitter.model(), fitter.log_likelihood());
  for (std::size_t s = 1; s <= params.sweeps; ++s) {
    fitter.sweep();
    if (observer) observer(s, fitter.model(), fitter.log_likelihood());
  }
  return fitter.take();
}

LdaModel fit_lda(const std::vector<std::vector<std::string>>& docs, const LdaParams& params,
                 const SweepObserver& observer) {
  std::vector<const std::vector<std::string>*> ptrs;
  for (const auto& d : docs) ptrs.push_back(&d);
  return fit_lda(docs, std::make_shared<const Vocabulary>(Vocabulary::build(ptrs)), params,
                 observer);
}

namespace {

std::vector<double> fold_in(const LdaModel& model, const std::vector<std::size_t>& words,
                            std::size_t sweeps, std::uint64_t seed) {
  const std::size_t h = model.topics();
  std::vector<double> theta(h, 1.0 / static_cast<double>(h));
  if (words.empty() || model.prior_only() || h == 1) return theta;

  Rng rng(doc_seed(seed, words));
  std::vector<std::uint32_t> z(words.size());
  std::vector<std::uint32_t> n(h, 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = static_cast<std::uint32_t>(rng.below(h));
    ++n[z[i]];
  }
  std::vector<double> weights(h);
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --n[z[i]];
      double total = 0.0;
      for (std::size_t k = 0; k < h; ++k) {
        weights[k] = (n[k] + model.alpha()) * model.phi(k, words[i]);
        total += weights[k];
      }
      z[i] = static_cast<std::uint32_t>(sample_index(weights, total, rng));
      ++n[z[i]];
    }
  }
  const double denom = static_cast<double>(words.size()) + h * model.alpha();
  for (std::size_t k = 0; k < h; ++k) theta[k] = (n[k] + model.alpha()) / denom;
  return theta;
}

}  // namespace

std::vector<double> doc_topic_posterior(const LdaModel& model,
                                        const std::vector<std::string>& tokens,
                                        std::size_t fold_in_sweeps, std::uint64_t seed) {
  return fold_in(model, model.vocab().encode(tokens), fold_in_sweeps, seed);
}

TopicModelTriple fit_triple(const StanceSubsets& subsets, std::shared_ptr<const Vocabulary> vocab,
                            const LdaParams& params) {
  TopicModelTriple triple;
  for (std::size_t s = 0; s < kNumStances; ++s) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(subsets[s].size());
    for (const Example* ex : subsets[s]) docs.push_back(ex->tokens);
    LdaParams p = params;
    p.seed = Rng::mix(params.seed + 0x1000 * (s + 1));
    if (docs.empty()) {
      // Prior-only model: no sampling happens, counts stay zero.
      p.sweeps = 1;
    }
    triple.models[s] = fit_lda(docs, vocab, p);
  }
  return triple;
}

TopicDistribution dis_vector(const TopicModelTriple& triple, const std::vector<std::string>& tokens,
                             std::size_t fold_in_sweeps, std::uint64_t seed) {
  const std::size_t h = triple.topics();
  TopicDistribution dis;
  dis.values.resize(kNumStances * h);
  for (std::size_t s = 0; s < kNumStances; ++s) {
    const auto theta =
        doc_topic_posterior(triple.models[s], tokens, fold_in_sweeps, Rng::mix(seed + s));
    for (std::size_t k = 0; k < h; ++k) dis.values[s * h + k] = theta[k] / 3.0;
  }
  return dis;
}

double perplexity(const LdaModel& model, const std::vector<std::vector<std::string>>& docs,
                  std::size_t fold_in_sweeps, std::uint64_t seed) {
  double log_sum = 0.0;
  std::size_t total = 0;
  for (const auto& doc : docs) {
    const auto words = model.vocab().encode(doc);
    if (words.empty()) continue;
    const auto theta = fold_in(model, words, fold_in_sweeps, seed);
    for (std::size_t w : words) {
      double p = 0.0;
      for (std::size_t k = 0; k < model.topics(); ++k) p += theta[k] * model.phi(k, w);
      log_sum += std::log(p);
    }
    total += words.size();
  }
  if (total == 0) throw Error("perplexity: no in-vocabulary tokens");
  return std::exp(-log_sum / static_cast<double>(total));
}

double umass_coherence(const LdaModel& model, const std::vector<std::vector<std::string>>& docs,
                       std::size_t top_n) {
  if (top_n < 2) throw Error("coherence needs top_n >= 2");
  std::vector<std::set<std::size_t>> doc_sets;
  doc_sets.reserve(docs.size());
  for (const auto& d : docs) {
    const auto words = model.vocab().encode(d);
    doc_sets.emplace_back(words.begin(), words.end());
  }
  auto count_docs = [&](std::size_t a, std::optional<std::size_t> b) {
    std::size_t c = 0;
    for (const auto& s : doc_sets) {
      if (s.count(a) && (!b || s.count(*b))) ++c;
    }
    return c;
  };
  double total = 0.0;
  for (std::size_t k = 0; k < model.topics(); ++k) {
    const auto top = model.top_words(k, top_n);
    double score = 0.0;
    for (std::size_t j = 1; j < top.size(); ++j) {
      const std::size_t dj = count_docs(top[j], std::nullopt);
      if (dj == 0) continue;
      for (std::size_t i = 0; i < j; ++i) {
        const std::size_t dij = count_docs(top[i], top[j]);
        score += std::log((static_cast<double>(dij) + 1.0) / static_cast<double>(dj));
      }
    }
    total += score;
  }
  return total / static_cast<double>(model.topics());
}

}  // namespace cosd
