#include <doctest.h>

#include <cmath>

#include "cosd/cpa.hpp"
#include "support.hpp"

using namespace cosd;
using testsupport::max_rel_err;
using testsupport::random_tensor;

namespace {

struct Setup {
  Tensor adjacency;
  SparseMatrix lap;
  Tensor e0;
  CpaWeights weights;
};

Setup make_setup(std::size_t n, std::size_t d0, std::size_t d1, std::size_t hops,
                 std::uint64_t seed) {
  Rng rng(seed);
  Setup s;
  s.adjacency = testsupport::random_adjacency(n, rng);
  s.lap = SparseMatrix::from_dense(testsupport::dense_normalized(s.adjacency));
  s.e0 = random_tensor(n, d0, rng, 0.5);
  s.weights = make_weights({d0, d1, hops}, seed + 1);
  return s;
}

std::vector<Tensor> values(const CpaWeights& w, bool first) {
  std::vector<Tensor> out;
  for (const auto& p : first ? w.w1 : w.w2) out.push_back(p.value);
  return out;
}

Tensor run_propagate(const Setup& s, double slope) {
  Tape tape;
  const Var e0 = tape.constant(s.e0);
  std::vector<Var> w1, w2;
  for (const auto& p : s.weights.w1) w1.push_back(tape.constant(p.value));
  for (const auto& p : s.weights.w2) w2.push_back(tape.constant(p.value));
  const auto prop = propagate(e0, s.lap, w1, w2, slope);
  return final_reps(e0, prop.layers).value();
}

}  // namespace

TEST_CASE("matrix propagation equals the literal per-node form") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = make_setup(9, 6, 4, 3, seed);
    const Tensor reps = run_propagate(s, 0.01);
    const auto layers = testsupport::node_form_propagate(s.e0, s.adjacency, values(s.weights, true),
                                                         values(s.weights, false), 0.01);
    std::vector<Tensor> parts{s.e0};
    parts.insert(parts.end(), layers.begin(), layers.end());
    CHECK(max_rel_err(reps, concat_cols(parts), 1e-9) < 1e-10);
  }
}

TEST_CASE("one-hop message equals the neighbour term of the node form") {
  Rng rng(4);
  const Tensor e = random_tensor(1, 5, rng), ei = random_tensor(1, 5, rng);
  const Tensor w1 = random_tensor(5, 3, rng), w2 = random_tensor(5, 3, rng);
  const auto msg = one_hop_message(e.row(0), ei.row(0), 2.0, 8.0, w1, w2);
  for (std::size_t j = 0; j < 3; ++j) {
    double ref = 0.0;
    for (std::size_t p = 0; p < 5; ++p) ref += ei(0, p) * w1(p, j) + e(0, p) * ei(0, p) * w2(p, j);
    CHECK(msg[j] == doctest::Approx(ref / 4.0));
  }
  CHECK_THROWS(one_hop_message(e.row(0), ei.row(0), 0.0, 1.0, w1, w2));
}

TEST_CASE("propagation gradients match finite differences") {
  auto s = make_setup(7, 5, 3, 2, 5);
  Parameter e0("e0", s.e0);
  auto loss_of = [&](Tape& tape) {
    const Var e = tape.leaf(e0);
    std::vector<Var> w1, w2;
    for (auto& p : s.weights.w1) w1.push_back(tape.leaf(p));
    for (auto& p : s.weights.w2) w2.push_back(tape.leaf(p));
    const auto prop = propagate(e, s.lap, w1, w2, 0.01);
    const Var reps = final_reps(e, prop.layers);
    return std::make_pair(sum(elemwise_mul(reps, reps)), prop.min_abs_preactivation);
  };
  Tape tape;
  const auto [loss, min_pre] = loss_of(tape);
  REQUIRE(min_pre > 1e-4);
  tape.backward(loss);
  auto f = [&]() {
    Tape t;
    return loss_of(t).first.value()(0, 0);
  };
  std::vector<Parameter*> all{&e0};
  for (auto& p : s.weights.w1) all.push_back(&p);
  for (auto& p : s.weights.w2) all.push_back(&p);
  for (Parameter* p : all) {
    CAPTURE(p->name);
    const Tensor analytic = p->grad;
    CHECK(max_rel_err(analytic, testsupport::numeric_grad(*p, f, 1e-6), 1e-3) < 1e-5);
  }
}

TEST_CASE("final representation width") {
  CHECK(CpaDims{768, 64, 3}.final_dim() == 960);
  CHECK(CpaDims{768, 64, 2}.final_dim() == 896);
  const auto s = make_setup(6, 8, 4, 3, 6);
  CHECK(run_propagate(s, 0.01).cols() == 8 + 3 * 4);
}

TEST_CASE("weights have the documented shapes") {
  const auto w = make_weights({10, 4, 3}, 7);
  REQUIRE(w.hops() == 3);
  CHECK(w.w1[0].value.rows() == 10);
  CHECK(w.w1[0].value.cols() == 4);
  CHECK(w.w2[2].value.rows() == 4);
  CHECK(w.w2[2].value.cols() == 4);
}

TEST_CASE("graph-free transform equals the literal loop") {
  Rng rng(8);
  const auto w = make_weights({5, 3, 2}, 9);
  const Tensor x = random_tensor(4, 5, rng);
  const Tensor got = infer_transform(x, w, 0.2);
  REQUIRE(got.cols() == 5 + 2 * 3);
  for (std::size_t r = 0; r < 4; ++r) {
    std::vector<double> prev(x.row(r).begin(), x.row(r).end());
    std::vector<double> expect = prev;
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> next(3, 0.0);
      for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t p = 0; p < prev.size(); ++p) {
          next[j] += prev[p] * w.w1[k].value(p, j) + prev[p] * w.w2[k].value(p, j);
        }
        if (next[j] < 0.0) next[j] *= 0.2;
      }
      expect.insert(expect.end(), next.begin(), next.end());
      prev = next;
    }
    for (std::size_t c = 0; c < expect.size(); ++c) CHECK(got(r, c) == doctest::Approx(expect[c]));
  }
}

TEST_CASE("graph-free transform with zero weights keeps the input") {
  auto w = make_weights({4, 2, 3}, 1);
  for (auto& p : w.w1) p.value.fill(0.0);
  for (auto& p : w.w2) p.value.fill(0.0);
  const Tensor x = Tensor::from_rows({{1.0, -2.0, 3.0, 0.5}});
  const Tensor got = infer_transform(x, w);
  REQUIRE(got.cols() == 10);
  for (std::size_t c = 0; c < 4; ++c) CHECK(got(0, c) == x(0, c));
  for (std::size_t c = 4; c < 10; ++c) CHECK(got(0, c) == 0.0);
}

TEST_CASE("model save and load round trip") {
  testsupport::TempDir dir("cpa");
  Rng rng(10);
  CpaModel m;
  m.dims = {6, 3, 2};
  m.topics_per_stance = 2;
  m.embeddings = make_embedding_table(random_tensor(4, 6, rng), random_tensor(6, 6, rng),
                                      random_tensor(3, 6, rng));
  m.weights = make_weights(m.dims, 11);
  m.save(dir / "cpa.bin");
  const auto back = CpaModel::load(dir / "cpa.bin");
  CHECK(back.dims.d0 == 6);
  CHECK(back.dims.d1 == 3);
  CHECK(back.dims.hops == 2);
  CHECK(back.topics_per_stance == 2);
  CHECK(back.embeddings.n_text == 4);
  CHECK(back.embeddings.n_topic == 6);
  CHECK(testsupport::same_values(back.embeddings.table.value, m.embeddings.table.value));
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(testsupport::same_values(back.weights.w1[k].value, m.weights.w1[k].value));
    CHECK(testsupport::same_values(back.weights.w2[k].value, m.weights.w2[k].value));
  }
  const auto bytes = testsupport::read_text(dir / "cpa.bin");
  CHECK(bytes.substr(0, 4) == "CPA1");
  testsupport::write_text(dir / "short.bin", bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS(CpaModel::load(dir / "short.bin"));
  testsupport::write_text(dir / "magic.bin", "XXXX" + bytes.substr(4));
  CHECK_THROWS(CpaModel::load(dir / "magic.bin"));
}

TEST_CASE("embedding table blocks") {
  Rng rng(12);
  const Tensor v = random_tensor(2, 3, rng), u = random_tensor(6, 3, rng), z = random_tensor(3, 3, rng);
  const auto t = make_embedding_table(v, u, z);
  CHECK(t.rows() == 11);
  CHECK(testsupport::same_values(t.text_block(), v));
  CHECK(testsupport::same_values(t.topic_block(), u));
  CHECK(testsupport::same_values(t.label_block(), z));
  CHECK_THROWS_AS(make_embedding_table(v, random_tensor(6, 4, rng), z), ShapeError);
}

TEST_CASE("propagate rejects a mismatched laplacian") {
  const auto s = make_setup(5, 4, 2, 1, 13);
  Rng rng(1);
  Tape tape;
  const Var e0 = tape.constant(random_tensor(6, 4, rng));
  std::vector<Var> w1{tape.constant(s.weights.w1[0].value)}, w2{tape.constant(s.weights.w2[0].value)};
  CHECK_THROWS_AS(propagate(e0, s.lap, w1, w2), ShapeError);
}
