#include "cosd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cosd/graph.hpp"

namespace cosd {

std::optional<ScoreMode> parse_score_mode(std::string_view s) {
  if (s == "full") return ScoreMode::Full;
  if (s == "no_sem" || s == "no-sem") return ScoreMode::NoSem;
  if (s == "no_dis" || s == "no-dis") return ScoreMode::NoDis;
  return std::nullopt;
}

std::optional<ScoreNorm> parse_score_norm(std::string_view s) {
  if (s == "none") return ScoreNorm::None;
  if (s == "zscore") return ScoreNorm::ZScore;
  return std::nullopt;
}

std::string_view to_string(ScoreMode m) {
  switch (m) {
    case ScoreMode::Full:
      return "full";
    case ScoreMode::NoSem:
      return "no_sem";
    case ScoreMode::NoDis:
      return "no_dis";
  }
  return "full";
}

StanceScores semantic_score(std::span<const double> e_sem, const Tensor& z_table) {
  if (z_table.rows() != kNumStances || z_table.cols() != e_sem.size()) {
    throw ShapeError("semantic_score: label table " + z_table.shape_string() + " vs dim " +
                     std::to_string(e_sem.size()));
  }
  StanceScores s{};
  for (std::size_t k = 0; k < kNumStances; ++k) s[k] = dot(e_sem, z_table.row(k));
  return s;
}

std::vector<double> distributed_rep(std::span<const double> dis, const Tensor& u_table) {
  if (dis.size() != u_table.rows()) {
    throw ShapeError("distributed_rep: " + std::to_string(dis.size()) + " weights for " +
                     std::to_string(u_table.rows()) + " topic rows");
  }
  std::vector<double> out(u_table.cols(), 0.0);
  for (std::size_t h = 0; h < dis.size(); ++h) {
    const auto row = u_table.row(h);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += dis[h] * row[c];
  }
  return out;
}

namespace {

StanceScores block_max(std::span<const double> e_dis, const Tensor& u_tilde) {
  const std::size_t h = u_tilde.rows() / kNumStances;
  StanceScores s{};
  for (std::size_t k = 0; k < kNumStances; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < h; ++j) best = std::max(best, dot(e_dis, u_tilde.row(k * h + j)));
    s[k] = best;
  }
  return s;
}

std::vector<double> transformed_dis(std::span<const double> dis, const Tensor& u_table,
                                    const CpaWeights& weights, double slope) {
  const auto x = distributed_rep(dis, u_table);
  const Tensor t = infer_transform(Tensor::row_vector(x), weights, slope);
  return {t.data().begin(), t.data().end()};
}

void zscore(StanceScores& s) {
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= kNumStances;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / kNumStances);
  for (double& v : s) v = sd > 0.0 ? (v - mean) / sd : 0.0;
}

}  // namespace

StanceScores distributed_score(std::span<const double> dis, const Tensor& u_table,
                               const CpaWeights& weights, double slope) {
  if (u_table.rows() == 0 || u_table.rows() % kNumStances != 0) {
    throw ShapeError("distributed_score: topic table must have 3H rows");
  }
  const auto e_dis = transformed_dis(dis, u_table, weights, slope);
  return block_max(e_dis, infer_transform(u_table, weights, slope));
}

Stance argmax_stance(const StanceScores& total) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumStances; ++k) {
    if (total[k] > total[best]) best = k;
  }
  return stance_at(best);
}

ScoreBundle combine(const StanceScores& sem, const StanceScores& dis, ScoreMode mode,
                    ScoreNorm norm) {
  ScoreBundle b;
  b.sem = sem;
  b.dis = dis;
  StanceScores s = sem, d = dis;
  if (norm == ScoreNorm::ZScore) {
    zscore(s);
    zscore(d);
  }
  for (std::size_t k = 0; k < kNumStances; ++k) {
    b.total[k] = (mode == ScoreMode::NoSem ? 0.0 : s[k]) + (mode == ScoreMode::NoDis ? 0.0 : d[k]);
  }
  b.predicted = argmax_stance(b.total);
  return b;
}

Predictor::Predictor(const TargetModel& model, const EncoderStore& store,
                     std::size_t fold_in_sweeps, std::uint64_t seed)
    : model_(&model),
      store_(&store),
      fold_in_sweeps_(fold_in_sweeps),
      seed_(seed),
      z_(model.cpa.embeddings.label_block()),
      u_tilde_(infer_transform(model.cpa.embeddings.topic_block(), model.cpa.weights,
                               model.cpa.slope)) {}

ScoreBundle Predictor::score(const Example& ex, ScoreMode mode, ScoreNorm norm) const {
  const auto e_sem = semantic_rep(*store_, ex);
  const auto dis = dis_vector(model_->triple, ex.tokens, fold_in_sweeps_, seed_);
  return score(e_sem, dis.values, mode, norm);
}

ScoreBundle Predictor::score(std::span<const double> e_sem, std::span<const double> dis,
                             ScoreMode mode, ScoreNorm norm) const {
  const auto& cpa = model_->cpa;
  const StanceScores sem = semantic_score(e_sem, z_);
  const auto e_dis = transformed_dis(dis, cpa.embeddings.topic_block(), cpa.weights, cpa.slope);
  return combine(sem, block_max(e_dis, u_tilde_), mode, norm);
}

ScoreBundle predict(const Example& ex, const EncoderStore& store, const StanceModel& model,
                    ScoreMode mode, ScoreNorm norm) {
  const Predictor p(model.for_target(ex.target), store, model.config.fold_in_sweeps,
                    model.config.seed);
  return p.score(ex, mode, norm);
}

std::vector<ScoreBundle> predict_all(std::span<const Example* const> examples,
                                     const EncoderStore& store, const StanceModel& model,
                                     ScoreMode mode, ScoreNorm norm) {
  std::vector<Predictor> predictors;
  predictors.reserve(model.parts.size());
  for (const auto& part : model.parts) {
    predictors.emplace_back(part, store, model.config.fold_in_sweeps, model.config.seed);
  }
  std::vector<ScoreBundle> out;
  out.reserve(examples.size());
  for (const Example* ex : examples) {
    const TargetModel& part = model.for_target(ex->target);
    const auto idx = static_cast<std::size_t>(&part - model.parts.data());
    out.push_back(predictors[idx].score(*ex, mode, norm));
  }
  return out;
}

std::vector<Neighbour> rank_neighbours(std::span<const double> query, const Tensor& reps,
                                       std::span<const std::string> ids, std::size_t k,
                                       std::string_view exclude_id) {
  const std::size_t candidates =
      ids.size() - static_cast<std::size_t>(std::count(ids.begin(), ids.end(), exclude_id));
  if (k > candidates) {
    throw Error("top-k: k = " + std::to_string(k) + " exceeds the " + std::to_string(candidates) +
                " training texts");
  }
  std::vector<Neighbour> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == exclude_id) continue;
    out.push_back({ids[i], cosine(query, reps.row(i))});
  }
  std::stable_sort(out.begin(), out.end(), [](const Neighbour& a, const Neighbour& b) {
    return a.similarity > b.similarity;
  });
  out.resize(k);
  return out;
}

HeteroTopicGraph rebuild_graph(const TargetModel& part, const Dataset& ds,
                               const TrainConfig& config) {
  std::vector<const Example*> train;
  train.reserve(part.train_ids.size());
  for (const auto& id : part.train_ids) {
    const Example* t = ds.find(id);
    if (!t) throw Error("training example '" + id + "' is not in the dataset");
    train.push_back(t);
  }
  std::vector<TopicDistribution> dis;
  dis.reserve(train.size());
  for (const Example* t : train) {
    dis.push_back(dis_vector(part.triple, t->tokens, config.fold_in_sweeps, config.seed));
  }
  return build_graph(train, dis);
}

std::vector<Neighbour> top_k_similar(const Example& ex, std::size_t k, const EncoderStore& store,
                                     const StanceModel& model, const Dataset& ds) {
  const TargetModel& part = model.for_target(ex.target);
  const HeteroTopicGraph graph = rebuild_graph(part, ds, model.config);
  const Tensor reps = frozen_final_reps(part.cpa, graph.lap);

  const auto& ids = part.train_ids;
  std::vector<double> query;
  std::size_t self = ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == ex.id) self = i;
  }
  if (self < ids.size()) {
    query.assign(reps.row(self).begin(), reps.row(self).end());
  } else {
    const Tensor q = infer_transform(Tensor::row_vector(store.pooled(ex.id)), part.cpa.weights,
                                     part.cpa.slope);
    query.assign(q.data().begin(), q.data().end());
  }

  return rank_neighbours(query, reps, ids, k, self < ids.size() ? ids[self] : std::string());
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

void export_attention(const Example& ex, const EncoderStore& store,
                      const std::filesystem::path& path) {
  const EncoderRecord& rec = store.at(ex.id);
  const Tensor tokens = rec.token_matrix(store.dim());
  const auto w = attention_weights(tokens, store.pooled(EncoderStore::target_key(ex.target)));

  std::vector<std::string> words;
  std::istringstream in(ex.text);
  for (std::string word; in >> word;) words.push_back(word);
  const bool named = rec.rows > 1 && words.size() == tokens.rows();

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "token,attention_weight\n";
  char buf[64];
  for (std::size_t t = 0; t < w.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.17g", w[t]);
    out << csv_field(named ? words[t] : std::to_string(t)) << ',' << buf << '\n';
  }
}

}  // namespace cosd
