#include <doctest.h>

#include <cmath>

#include "cosd/inference.hpp"
#include "cosd/synth.hpp"
#include "cosd/training.hpp"
#include "support.hpp"

using namespace cosd;
using testsupport::random_tensor;

namespace {

struct Small {
  SynthData data;
  Dataset ds;
};

Small small_corpus(std::uint64_t seed = 5) {
  SynthOptions o;
  o.dim = 16;
  o.train = 60;
  o.val = 18;
  o.test = 18;
  o.topics = 2;
  o.seed = seed;
  Small s{generate_synthetic(o), {}};
  s.ds = Dataset::assemble(s.data.examples);
  return s;
}

TrainConfig small_config() {
  TrainConfig c;
  c.embed_dim = 16;
  c.hidden_dim = 4;
  c.hops = 2;
  c.topics = 2;
  c.lda_sweeps = 20;
  c.fold_in_sweeps = 10;
  c.epochs = 3;
  c.batch_size = 8;
  c.lr_cpa = 1e-3;
  c.lr_embed = 1e-3;
  return c;
}

std::vector<double> unit(std::size_t dim, std::size_t axis, double scale = 1.0) {
  std::vector<double> v(dim, 0.0);
  v[axis] = scale;
  return v;
}

}  // namespace

TEST_CASE("contrastive loss reference values") {
  const auto v = unit(3, 0);
  const auto same = unit(3, 1);
  std::vector<std::span<const double>> negs{same, same};
  CHECK(loss_contrastive(v, same, negs) == doctest::Approx(std::log(2.0)));

  const auto pos20 = unit(3, 0, 20.0);
  const auto zero = std::vector<double>(3, 0.0);
  std::vector<std::span<const double>> zeros{zero, zero};
  CHECK(loss_contrastive(v, pos20, zeros) < 1e-8);

  const auto pos1 = unit(3, 0, 1.0);
  CHECK(loss_contrastive(v, pos1, zeros) == doctest::Approx(0.313262).epsilon(1e-6));
  CHECK_THROWS(loss_contrastive(v, pos1, {}));
}

TEST_CASE("cosine loss") {
  CHECK(loss_cosine(unit(3, 0), unit(3, 0, 5.0)) == doctest::Approx(0.0));
  CHECK(loss_cosine(unit(3, 0), unit(3, 1)) == doctest::Approx(1.0));
  CHECK(loss_cosine(unit(3, 0), unit(3, 0, -2.0)) == doctest::Approx(2.0));
}

TEST_CASE("attention favours the token aligned with the target") {
  const std::size_t d = kEncoderDim;
  Tensor tokens(3, d);
  for (std::size_t t = 0; t < 3; ++t) tokens(t, t) = 1.0;
  const auto w = attention_weights(tokens, unit(d, 1));
  CHECK(w[1] / w[0] == doctest::Approx(std::exp(1.0 / std::sqrt(768.0))));
  CHECK(w[0] == doctest::Approx(w[2]));
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  const auto rep = semantic_rep(tokens, unit(d, 1));
  for (std::size_t t = 0; t < 3; ++t) CHECK(rep[t] == doctest::Approx(w[t]));
  CHECK_THROWS(attention_weights(Tensor(0, d), unit(d, 1)));
}

TEST_CASE("batch loss equals the per-text formulas") {
  Rng rng(3);
  const std::size_t n = 10, d = 5;
  const Tensor reps_v = random_tensor(n, 8, rng);
  const Tensor e0_v = random_tensor(n, d, rng);
  const std::vector<std::size_t> rows{1, 4, 2};
  const std::vector<Stance> labels{Stance::Against, Stance::Favor, Stance::None};
  const Tensor e_sem = random_tensor(3, d, rng);
  const std::size_t label_offset = 7;

  Tape tape;
  const auto loss = batch_loss(tape.constant(reps_v), tape.constant(e0_v), rows, labels,
                               label_offset, e_sem);
  double contrastive = 0.0, cosine_term = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = reps_v.row(rows[i]);
    const std::size_t gold = index_of(labels[i]);
    std::vector<std::span<const double>> negs;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != gold) negs.push_back(reps_v.row(label_offset + k));
    }
    contrastive += loss_contrastive(v, reps_v.row(label_offset + gold), negs);
    cosine_term += loss_cosine(e_sem.row(i), e0_v.row(rows[i]));
  }
  contrastive /= 3.0;
  cosine_term /= 3.0;
  CHECK(loss.contrastive.value()(0, 0) == doctest::Approx(contrastive).epsilon(1e-12));
  CHECK(loss.cosine.value()(0, 0) == doctest::Approx(cosine_term).epsilon(1e-12));
  CHECK(loss.total.value()(0, 0) == doctest::Approx(contrastive + cosine_term).epsilon(1e-12));
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.epochs = 0; });
  bad([](TrainConfig& c) { c.lr_cpa = 0.0; });
  bad([](TrainConfig& c) { c.dropout = 1.0; });
  bad([](TrainConfig& c) { c.topics = 0; });
  bad([](TrainConfig& c) { c.lda_beta = -1.0; });
  CHECK(c.dims().final_dim() == 960);
  CHECK(c.lda_params(9).seed == 9);
}

TEST_CASE("trial seeds") {
  CHECK(trial_seed(42, 0) == 42);
  CHECK(trial_seed(42, 1) != 42);
  CHECK(trial_seed(42, 1) != trial_seed(42, 2));
  CHECK(trial_seed(42, 2) == trial_seed(42, 2));
}

TEST_CASE("topic triples per target and joint") {
  const auto s = small_corpus();
  auto c = small_config();
  const auto per = fit_topic_triples(s.ds, c, 1);
  CHECK(per.size() == s.ds.targets().size());
  for (const auto& t : s.ds.targets()) CHECK(per.count(t) == 1);
  c.joint = true;
  const auto joint = fit_topic_triples(s.ds, c, 1);
  REQUIRE(joint.size() == 1);
  CHECK(joint.begin()->first == kJointKey);
  CHECK(joint.begin()->second.topics() == 2);
}

TEST_CASE("partition and initial model layout") {
  const auto s = small_corpus();
  const auto c = small_config();
  const auto triples = fit_topic_triples(s.ds, c, 1);
  const auto& t = s.ds.targets()[0];
  const auto part = build_partition(t, s.ds.split(Split::Train, t), triples.at(t), s.data.store, c);
  CHECK(part.graph.n_text == part.train.size());
  CHECK(part.graph.n_topic == 6);
  CHECK(part.e_sem.rows() == part.train.size());
  const auto m = init_cpa(part, s.data.store, c, 7);
  CHECK(m.embeddings.n_text == part.train.size());
  CHECK(m.embeddings.n_topic == 6);
  const auto pooled = s.data.store.pooled(part.train[0]->id);
  for (std::size_t j = 0; j < 16; ++j) CHECK(m.embeddings.text_block()(0, j) == pooled[j]);
  const auto fav = s.data.store.pooled(EncoderStore::label_key(Stance::Favor));
  for (std::size_t j = 0; j < 16; ++j) CHECK(m.embeddings.label_block()(0, j) == fav[j]);
  auto wrong = c;
  wrong.embed_dim = 8;
  CHECK_THROWS_AS(init_cpa(part, s.data.store, wrong, 7), ShapeError);
}

TEST_CASE("a tiny adam step lowers the loss") {
  const auto s = small_corpus();
  const auto c = small_config();
  const auto triples = fit_topic_triples(s.ds, c, 1);
  const auto& t = s.ds.targets()[0];
  const auto part = build_partition(t, s.ds.split(Split::Train, t), triples.at(t), s.data.store, c);
  auto m = init_cpa(part, s.data.store, c, 7);
  std::vector<std::size_t> rows;
  std::vector<Stance> labels;
  for (std::size_t i = 0; i < part.train.size(); ++i) {
    rows.push_back(i);
    labels.push_back(part.train[i]->stance);
  }
  auto evaluate = [&](bool step) {
    Tape tape;
    const Var e0 = tape.leaf(m.embeddings.table);
    std::vector<Var> w1, w2;
    for (auto& p : m.weights.w1) w1.push_back(tape.leaf(p));
    for (auto& p : m.weights.w2) w2.push_back(tape.leaf(p));
    const auto prop = propagate(e0, part.graph.lap, w1, w2, m.slope);
    const auto loss = batch_loss(final_reps(e0, prop.layers), e0, rows, labels,
                                 m.embeddings.label_offset(), part.e_sem);
    if (step) {
      tape.backward(loss.total);
      AdamState a(1e-7), b(1e-7);
      const auto ep = m.embedding_params();
      const auto wp = m.weight_params();
      adam_step(a, ep);
      adam_step(b, wp);
    }
    return loss.total.value()(0, 0);
  };
  const double before = evaluate(true);
  const double after = evaluate(false);
  CHECK(after < before);
}

TEST_CASE("training runs, logs and is deterministic") {
  const auto s = small_corpus();
  const auto c = small_config();
  const auto triples = fit_topic_triples(s.ds, c, 1);
  std::size_t calls = 0;
  const auto a = train(s.ds, s.data.store, triples, c, 11, [&](const EpochLog& e) {
    CHECK(e.epoch == ++calls);
    CHECK(std::isfinite(e.loss));
  });
  const auto b = train(s.ds, s.data.store, triples, c, 11);
  CHECK(calls == 3);
  REQUIRE(a.log.size() == 3);
  CHECK(a.best_epoch >= 1);
  double best = 0.0;
  for (const auto& e : a.log) best = std::max(best, e.val_micro);
  CHECK(a.log[a.best_epoch - 1].val_micro == best);
  REQUIRE(a.model.parts.size() == b.model.parts.size());
  for (std::size_t i = 0; i < a.model.parts.size(); ++i) {
    CHECK(testsupport::same_values(a.model.parts[i].cpa.embeddings.table.value,
                                   b.model.parts[i].cpa.embeddings.table.value));
  }
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
  const auto other = train(s.ds, s.data.store, triples, c, 12);
  CHECK(other.log[0].loss != a.log[0].loss);
}

TEST_CASE("joint training uses one partition") {
  const auto s = small_corpus();
  auto c = small_config();
  c.joint = true;
  c.epochs = 1;
  const auto r = train(s.ds, s.data.store, fit_topic_triples(s.ds, c, 1), c, 3);
  REQUIRE(r.model.parts.size() == 1);
  CHECK(r.model.parts[0].key == kJointKey);
  CHECK(&r.model.for_target(s.ds.targets()[1]) == &r.model.parts[0]);
}

TEST_CASE("model save and load keeps predictions") {
  testsupport::TempDir dir("model");
  const auto s = small_corpus();
  const auto c = small_config();
  const auto r = train(s.ds, s.data.store, fit_topic_triples(s.ds, c, 1), c, 11);
  r.model.save(dir.path());
  const auto back = StanceModel::load(dir.path());
  CHECK(back.parts.size() == r.model.parts.size());
  CHECK(back.config.hidden_dim == 4);
  CHECK(back.config.seed == r.model.config.seed);
  CHECK(back.parts[0].train_ids == r.model.parts[0].train_ids);
  const auto test = s.ds.split(Split::Test);
  const auto p1 = predict_all(test, s.data.store, r.model);
  const auto p2 = predict_all(test, s.data.store, back);
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(p1[i].predicted == p2[i].predicted);
    CHECK(p1[i].total == p2[i].total);
  }
  CHECK_THROWS(r.model.for_target("nope"));
  CHECK_THROWS(StanceModel::load(dir / "absent"));
}

TEST_CASE("training refuses missing embeddings") {
  auto s = small_corpus();
  EncoderStore partial(16);
  for (const auto& id : s.data.store.ids()) {
    if (id != s.ds.split(Split::Train)[0]->id) partial.insert(id, *s.data.store.find(id));
  }
  const auto c = small_config();
  CHECK_THROWS_WITH_AS(train(s.ds, partial, fit_topic_triples(s.ds, c, 1), c, 1),
                       doctest::Contains("missing embeddings"), Error);
}
