#include "cosd/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cosd/inference.hpp"
#include "cosd/kernels.hpp"

namespace cosd {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid config: " + what); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (epochs == 0) fail("epochs must be positive");
  if (!(lr_cpa > 0.0) || !(lr_embed > 0.0)) fail("learning rates must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (topics == 0) fail("topics must be positive");
  if (hidden_dim == 0 || embed_dim == 0) fail("dimensions must be positive");
  if (lda_beta <= 0.0) fail("lda_beta must be positive");
  if (lda_sweeps == 0) fail("lda_sweeps must be positive");
  if (trials == 0) fail("trials must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) fail("leaky_slope must lie in [0, 1)");
}

LdaParams TrainConfig::lda_params(std::uint64_t s) const {
  return LdaParams{topics, lda_alpha, lda_beta, lda_sweeps, s};
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return trial == 0 ? base_seed : Rng::mix(base_seed + trial);
}

std::vector<double> attention_weights(const Tensor& tokens, std::span<const double> target) {
  if (tokens.rows() == 0) throw Error("attention over zero tokens");
  if (tokens.cols() != target.size()) throw ShapeError("attention: token/target dims differ");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(target.size()));
  std::vector<double> w(tokens.rows());
  for (std::size_t t = 0; t < tokens.rows(); ++t) w[t] = dot(tokens.row(t), target) * inv_sqrt_d;
  const double mx = *std::max_element(w.begin(), w.end());
  double z = 0.0;
  for (double& v : w) z += (v = std::exp(v - mx));
  for (double& v : w) v /= z;
  return w;
}

std::vector<double> semantic_rep(const Tensor& tokens, std::span<const double> target) {
  const auto w = attention_weights(tokens, target);
  std::vector<double> out(tokens.cols(), 0.0);
  for (std::size_t t = 0; t < tokens.rows(); ++t) {
    kernels::active().axpy(w[t], tokens.row(t).data(), out.data(), out.size());
  }
  return out;
}

std::vector<double> semantic_rep(const EncoderStore& store, const Example& ex) {
  return semantic_rep(store.tokens(ex.id), store.pooled(EncoderStore::target_key(ex.target)));
}

double loss_contrastive(std::span<const double> v, std::span<const double> z_pos,
                        std::span<const std::span<const double>> z_negs) {
  if (z_negs.empty()) throw Error("contrastive loss needs at least one negative");
  const double pos = dot(v, z_pos);
  double total = 0.0;
  for (const auto& neg : z_negs) {
    const double x = pos - dot(v, neg);
    // -log sigmoid(x) = softplus(-x)
    total += std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  return total / static_cast<double>(z_negs.size());
}

double loss_cosine(std::span<const double> e_sem, std::span<const double> v) {
  return 1.0 - cosine(e_sem, v);
}

BatchLoss batch_loss(Var reps, Var e0, std::span<const std::size_t> text_rows,
                     std::span<const Stance> labels, std::size_t label_offset,
                     const Tensor& e_sem_rows) {
  const std::size_t b = text_rows.size();
  if (labels.size() != b || e_sem_rows.rows() != b) throw ShapeError("batch_loss: batch sizes differ");
  Tape& tape = *reps.tape;

  Tensor gold(b, kNumStances), negatives(b, kNumStances, 1.0);
  for (std::size_t i = 0; i < b; ++i) {
    gold(i, index_of(labels[i])) = 1.0;
    negatives(i, index_of(labels[i])) = 0.0;
  }
  const Var v_tilde = gather_rows(reps, text_rows);
  const Var z_tilde = slice_rows(reps, label_offset, kNumStances);
  const Var scores = matmul(v_tilde, transpose(z_tilde));
  const Var pos = row_sum(elemwise_mul(scores, tape.constant(std::move(gold))));
  const Var margins = sub(matmul(pos, tape.constant(Tensor(1, kNumStances, 1.0))), scores);
  const Var masked = elemwise_mul(logsigmoid(margins), tape.constant(std::move(negatives)));
  const Var contrastive =
      scale(sum(masked), -1.0 / static_cast<double>(b * (kNumStances - 1)));

  const Var v0 = gather_rows(e0, text_rows);
  const Var cos = cosine_sim(tape.constant(e_sem_rows), v0);
  const Var cosine = add_scalar(scale(mean(cos), -1.0), 1.0);
  return {add(contrastive, cosine), contrastive, cosine};
}

TopicTriples fit_topic_triples(const Dataset& ds, const TrainConfig& config, std::uint64_t seed) {
  auto vocab = std::make_shared<const Vocabulary>(ds.vocab());
  TopicTriples triples;
  if (config.joint) {
    StanceSubsets all;
    for (const auto& t : ds.targets()) {
      const auto sub = stance_subsets(ds, t);
      for (std::size_t s = 0; s < kNumStances; ++s) {
        all[s].insert(all[s].end(), sub[s].begin(), sub[s].end());
      }
    }
    triples.emplace(std::string(kJointKey), fit_triple(all, vocab, config.lda_params(seed)));
    return triples;
  }
  for (std::size_t i = 0; i < ds.targets().size(); ++i) {
    const auto& t = ds.targets()[i];
    triples.emplace(t, fit_triple(stance_subsets(ds, t), vocab,
                                  config.lda_params(Rng::mix(seed ^ fnv1a(t)))));
  }
  return triples;
}

Partition build_partition(std::string key, std::vector<const Example*> train,
                          const TopicModelTriple& triple, const EncoderStore& store,
                          const TrainConfig& config) {
  Partition p;
  p.key = std::move(key);
  p.train = std::move(train);
  p.dis.reserve(p.train.size());
  p.e_sem = Tensor(p.train.size(), store.dim());
  for (std::size_t i = 0; i < p.train.size(); ++i) {
    const Example& ex = *p.train[i];
    p.dis.push_back(dis_vector(triple, ex.tokens, config.fold_in_sweeps, config.seed));
    const auto sem = semantic_rep(store, ex);
    std::copy(sem.begin(), sem.end(), p.e_sem.row(i).begin());
  }
  p.graph = build_graph(p.train, p.dis);
  return p;
}

CpaModel init_cpa(const Partition& part, const EncoderStore& store, const TrainConfig& config,
                  std::uint64_t seed) {
  const std::size_t d0 = config.embed_dim;
  if (store.dim() != d0) {
    throw ShapeError("encoder dim " + std::to_string(store.dim()) + " vs embed_dim " +
                     std::to_string(d0));
  }
  Tensor text(part.train.size(), d0);
  for (std::size_t i = 0; i < part.train.size(); ++i) {
    const auto v = store.pooled(part.train[i]->id);
    std::copy(v.begin(), v.end(), text.row(i).begin());
  }
  const Tensor topics = xavier_init(kNumStances * config.topics, d0, Rng::mix(seed ^ 0x70));
  Tensor labels(kNumStances, d0);
  for (Stance s : kStances) {
    const auto v = store.pooled(EncoderStore::label_key(s));
    std::copy(v.begin(), v.end(), labels.row(index_of(s)).begin());
  }
  CpaModel m;
  m.embeddings = make_embedding_table(text, topics, labels);
  m.dims = config.dims();
  m.weights = make_weights(m.dims, Rng::mix(seed ^ 0x77));
  m.topics_per_stance = config.topics;
  m.slope = config.leaky_slope;
  return m;
}

namespace {

struct PartState {
  Partition part;
  CpaModel* model;
  AdamState adam_embed;
  AdamState adam_cpa;
};

}  // namespace

TrialResult train(const Dataset& ds, const EncoderStore& store, const TopicTriples& triples,
                  const TrainConfig& config, std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  {
    std::vector<std::string> missing;
    for (const auto& ex : ds.examples()) {
      if (ex.split != Split::Test && !store.find(ex.id)) missing.push_back(ex.id);
    }
    if (!missing.empty()) {
      std::string msg = "missing embeddings for " + std::to_string(missing.size()) + " ids:";
      for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i) msg += " " + missing[i];
      throw Error(msg);
    }
  }

  TrialResult result;
  result.seed = seed;
  StanceModel& current = result.model;
  current.joint = config.joint;
  current.config = config;

  std::vector<std::pair<std::string, std::vector<const Example*>>> groups;
  if (config.joint) {
    groups.emplace_back(std::string(kJointKey), ds.split(Split::Train));
  } else {
    for (const auto& t : ds.targets()) groups.emplace_back(t, ds.split(Split::Train, t));
  }

  current.parts.reserve(groups.size());
  std::vector<PartState> states;
  states.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& [key, train_set] = groups[g];
    if (train_set.empty()) continue;
    auto it = triples.find(key);
    if (it == triples.end()) throw Error("no topic models for partition '" + key + "'");
    Partition part = build_partition(key, train_set, it->second, store, config);
    TargetModel tm;
    tm.key = key;
    tm.triple = it->second;
    tm.cpa = init_cpa(part, store, config, Rng::mix(seed + 131 * (g + 1)));
    for (const Example* ex : train_set) tm.train_ids.push_back(ex->id);
    current.parts.push_back(std::move(tm));
    states.push_back(PartState{std::move(part), nullptr, AdamState(config.lr_embed),
                               AdamState(config.lr_cpa)});
  }
  if (states.empty()) throw Error("no training examples");
  for (std::size_t i = 0; i < states.size(); ++i) states[i].model = &current.parts[i].cpa;

  const auto val = ds.split(Split::Val);
  Rng rng(Rng::mix(seed ^ 0xd1b54a32d192ed03ULL));
  double best_micro = -1.0;
  StanceModel best = current;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (auto& st : states) {
      const std::size_t n = st.part.train.size();
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      const SparseMatrix lap =
          dropout_graph(st.part.graph.lap, config.dropout, config.dropout, rng);

      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t end = std::min(n, start + config.batch_size);
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<Stance> labels;
        Tensor e_sem(rows.size(), st.part.e_sem.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          labels.push_back(st.part.train[rows[i]]->stance);
          std::copy(st.part.e_sem.row(rows[i]).begin(), st.part.e_sem.row(rows[i]).end(),
                    e_sem.row(i).begin());
        }

        CpaModel& m = *st.model;
        Tape tape;
        const Var e0 = tape.leaf(m.embeddings.table);
        std::vector<Var> w1, w2;
        for (auto& p : m.weights.w1) w1.push_back(tape.leaf(p));
        for (auto& p : m.weights.w2) w2.push_back(tape.leaf(p));
        BatchLoss loss;
        try {
          const auto prop = propagate(e0, lap, w1, w2, m.slope);
          const Var reps = final_reps(e0, prop.layers);
          loss = batch_loss(reps, e0, rows, labels, m.embeddings.label_offset(), e_sem);
        } catch (const NumericError& e) {
          throw NumericError("non-finite value in epoch " + std::to_string(epoch) +
                             ", partition '" + st.part.key + "': " + e.what());
        }
        loss_sum += loss.total.value()(0, 0);
        ++batches;
        tape.backward(loss.total);
        const auto embed_params = m.embedding_params();
        const auto weight_params = m.weight_params();
        adam_step(st.adam_embed, embed_params);
        adam_step(st.adam_cpa, weight_params);
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1));
    bool improved = val.empty();
    if (!val.empty()) {
      const auto scores = predict_all(val, store, current);
      std::vector<Stance> preds, golds;
      std::vector<std::string> tags;
      for (std::size_t i = 0; i < val.size(); ++i) {
        preds.push_back(scores[i].predicted);
        golds.push_back(val[i]->stance);
        tags.push_back(val[i]->target);
      }
      const auto mm = macro_micro(preds, golds, tags);
      entry.val_macro = mm.macro;
      entry.val_micro = mm.micro;
      improved = mm.micro > best_micro;
    }
    if (improved) {
      best_micro = entry.val_micro;
      best = current;
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  // Parameter pointers inside states refer to `current`; `best` is a deep copy.
  result.model = std::move(best);
  return result;
}

const TargetModel& StanceModel::for_target(std::string_view target) const {
  for (const auto& p : parts) {
    if (joint || p.key == target) return p;
  }
  throw Error("no trained model for target '" + std::string(target) + "'");
}

namespace {

const char* kStanceFileNames[] = {"favor", "none", "against"};

nlohmann::json config_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr_cpa", c.lr_cpa},
          {"lr_embed", c.lr_embed},
          {"dropout", c.dropout},
          {"hops", c.hops},
          {"topics", c.topics},
          {"hidden_dim", c.hidden_dim},
          {"embed_dim", c.embed_dim},
          {"lda_alpha", c.lda_alpha},
          {"lda_beta", c.lda_beta},
          {"lda_sweeps", c.lda_sweeps},
          {"fold_in_sweeps", c.fold_in_sweeps},
          {"leaky_slope", c.leaky_slope},
          {"joint", c.joint},
          {"seed", c.seed},
          {"trials", c.trials}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.lr_cpa = j.at("lr_cpa");
  c.lr_embed = j.at("lr_embed");
  c.dropout = j.at("dropout");
  c.hops = j.at("hops");
  c.topics = j.at("topics");
  c.hidden_dim = j.at("hidden_dim");
  c.embed_dim = j.at("embed_dim");
  c.lda_alpha = j.at("lda_alpha");
  c.lda_beta = j.at("lda_beta");
  c.lda_sweeps = j.at("lda_sweeps");
  c.fold_in_sweeps = j.at("fold_in_sweeps");
  c.leaky_slope = j.at("leaky_slope");
  c.joint = j.at("joint");
  c.seed = j.at("seed");
  c.trials = j.at("trials");
  return c;
}

}  // namespace

void StanceModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format"] = "cosd-model-1";
  j["joint"] = joint;
  j["config"] = config_json(config);
  j["parts"] = nlohmann::json::array();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    const std::string stem = std::to_string(i);
    p.cpa.save(dir / ("cpa_" + stem + ".bin"));
    nlohmann::json lda = nlohmann::json::array();
    for (std::size_t s = 0; s < kNumStances; ++s) {
      const std::string name = "lda_" + stem + "_" + kStanceFileNames[s];
      p.triple.models[s].save(dir / (name + ".bin"));
      p.triple.models[s].save_summary_json(dir / (name + ".json"));
      lda.push_back(name + ".bin");
    }
    j["parts"].push_back({{"key", p.key},
                          {"cpa", "cpa_" + stem + ".bin"},
                          {"lda", lda},
                          {"train_ids", p.train_ids}});
  }
  std::ofstream out(dir / "model.json");
  if (!out) throw IoError("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

StanceModel StanceModel::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("missing file: " + (dir / "model.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad model.json: " + std::string(e.what()));
  }
  StanceModel m;
  m.joint = j.at("joint");
  m.config = config_from_json(j.at("config"));
  for (const auto& pj : j.at("parts")) {
    TargetModel p;
    p.key = pj.at("key");
    p.cpa = CpaModel::load(dir / pj.at("cpa").get<std::string>(), m.config.leaky_slope);
    const auto& lda = pj.at("lda");
    for (std::size_t s = 0; s < kNumStances; ++s) {
      p.triple.models[s] = LdaModel::load(dir / lda.at(s).get<std::string>());
    }
    p.train_ids = pj.at("train_ids").get<std::vector<std::string>>();
    m.parts.push_back(std::move(p));
  }
  return m;
}

}  // namespace cosd
