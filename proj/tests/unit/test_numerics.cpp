#include <doctest.h>

#include <cmath>
#include <functional>

#include "cosd/numerics.hpp"
#include "support.hpp"

using namespace cosd;
using testsupport::max_rel_err;
using testsupport::numeric_grad;
using testsupport::random_tensor;

namespace {

using Op = std::function<Var(Tape&, std::vector<Var>&)>;

// Checks d(sum(op(inputs) * R))/d(input) against central differences for
// every input, with R a fixed random weighting of the output.
void check_op(const std::string& name, std::vector<Parameter> inputs, const Op& op, double tol = 1e-6) {
  CAPTURE(name);
  Rng rng(99);
  Tensor weights;
  auto loss_value = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : inputs) vars.push_back(tape.constant(p.value));
    const Var out = op(tape, vars);
    if (weights.size() != out.value().size()) {
      weights = random_tensor(out.rows(), out.cols(), rng);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights.data()[i] * out.value().data()[i];
    return s;
  };
  loss_value();

  Tape tape;
  std::vector<Var> vars;
  for (auto& p : inputs) vars.push_back(tape.leaf(p));
  const Var out = op(tape, vars);
  const Var loss = sum(elemwise_mul(out, tape.constant(weights)));
  tape.backward(loss);
  for (auto& p : inputs) {
    CAPTURE(p.name);
    const Tensor analytic = p.grad;
    const Tensor numeric = numeric_grad(p, loss_value);
    CHECK(max_rel_err(analytic, numeric, 1e-3) < tol);
  }
}

Parameter param(const char* name, std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  return Parameter(name, random_tensor(r, c, rng, scale));
}

// Entries bounded away from zero so kinks are not crossed by the finite step.
Parameter away_from_zero(const char* name, std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.data()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 1.5);
  return Parameter(name, t);
}

}  // namespace

TEST_CASE("every op matches finite differences") {
  Rng rng(1);
  check_op("matmul", {param("a", 3, 4, rng), param("b", 4, 5, rng)},
           [](Tape&, std::vector<Var>& v) { return matmul(v[0], v[1]); });
  const SparseMatrix s = SparseMatrix::from_dense(testsupport::random_adjacency(5, rng));
  check_op("spmm", {param("x", 5, 3, rng)},
           [&](Tape&, std::vector<Var>& v) { return spmm(s, v[0]); });
  check_op("add", {param("a", 3, 4, rng), param("b", 3, 4, rng)},
           [](Tape&, std::vector<Var>& v) { return add(v[0], v[1]); });
  check_op("add broadcast", {param("a", 3, 4, rng), param("b", 1, 4, rng)},
           [](Tape&, std::vector<Var>& v) { return add(v[0], v[1]); });
  check_op("sub", {param("a", 3, 4, rng), param("b", 3, 4, rng)},
           [](Tape&, std::vector<Var>& v) { return sub(v[0], v[1]); });
  check_op("elemwise_mul", {param("a", 3, 4, rng), param("b", 3, 4, rng)},
           [](Tape&, std::vector<Var>& v) { return elemwise_mul(v[0], v[1]); });
  check_op("scale", {param("a", 2, 3, rng)},
           [](Tape&, std::vector<Var>& v) { return scale(v[0], -2.5); });
  check_op("add_scalar", {param("a", 2, 3, rng)},
           [](Tape&, std::vector<Var>& v) { return add_scalar(v[0], 4.0); });
  check_op("concat_cols", {param("a", 3, 2, rng), param("b", 3, 4, rng), param("c", 3, 1, rng)},
           [](Tape&, std::vector<Var>& v) { return concat_cols(v); });
  check_op("gather_rows", {param("a", 4, 3, rng)}, [](Tape&, std::vector<Var>& v) {
    const std::vector<std::size_t> rows{2, 0, 2, 3};
    return gather_rows(v[0], rows);
  });
  check_op("slice_rows", {param("a", 5, 3, rng)},
           [](Tape&, std::vector<Var>& v) { return slice_rows(v[0], 1, 3); });
  check_op("transpose", {param("a", 2, 5, rng)},
           [](Tape&, std::vector<Var>& v) { return transpose(v[0]); });
  check_op("leaky_relu", {away_from_zero("a", 4, 4, rng)},
           [](Tape&, std::vector<Var>& v) { return leaky_relu(v[0], 0.01); });
  check_op("softmax_rows", {param("a", 3, 5, rng)},
           [](Tape&, std::vector<Var>& v) { return softmax_rows(v[0]); });
  check_op("cosine_sim", {param("a", 4, 6, rng), param("b", 4, 6, rng)},
           [](Tape&, std::vector<Var>& v) { return cosine_sim(v[0], v[1]); });
  check_op("logsigmoid", {param("a", 3, 4, rng, 3.0)},
           [](Tape&, std::vector<Var>& v) { return logsigmoid(v[0]); });
  check_op("sum", {param("a", 3, 4, rng)}, [](Tape&, std::vector<Var>& v) { return sum(v[0]); });
  check_op("mean", {param("a", 3, 4, rng)}, [](Tape&, std::vector<Var>& v) { return mean(v[0]); });
  check_op("row_sum", {param("a", 3, 4, rng)},
           [](Tape&, std::vector<Var>& v) { return row_sum(v[0]); });
  check_op("shared input", {param("a", 3, 3, rng)}, [](Tape&, std::vector<Var>& v) {
    return elemwise_mul(matmul(v[0], v[0]), add(v[0], transpose(v[0])));
  });
}

TEST_CASE("op values match direct formulas") {
  Tape tape;
  const Var x = tape.constant(Tensor::from_rows({{0.0, 800.0, -800.0}}));
  const auto ls = logsigmoid(x).value();
  CHECK(ls(0, 0) == doctest::Approx(-std::log(2.0)));
  CHECK(ls(0, 1) == doctest::Approx(0.0));
  CHECK(ls(0, 2) == doctest::Approx(-800.0));
  const auto sm = softmax_rows(tape.constant(Tensor::from_rows({{1000.0, 1000.0}}))).value();
  CHECK(sm(0, 0) == doctest::Approx(0.5));
  const auto cs = cosine_sim(tape.constant(Tensor::from_rows({{1.0, 0.0}, {1.0, 1.0}})),
                             tape.constant(Tensor::from_rows({{0.0, 2.0}, {3.0, 3.0}})))
                      .value();
  CHECK(cs(0, 0) == doctest::Approx(0.0));
  CHECK(cs(1, 0) == doctest::Approx(1.0));
  const auto lr = leaky_relu(tape.constant(Tensor::from_rows({{-2.0, 3.0}})), 0.1).value();
  CHECK(lr(0, 0) == doctest::Approx(-0.2));
  CHECK(lr(0, 1) == 3.0);
}

TEST_CASE("shape and finiteness are checked") {
  Tape tape;
  const Var a = tape.constant(Tensor(2, 3, 1.0));
  const Var b = tape.constant(Tensor(2, 2, 1.0));
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(elemwise_mul(a, b), ShapeError);
  CHECK_THROWS_AS(slice_rows(a, 1, 2), ShapeError);
  const Var big = tape.constant(Tensor(1, 1, 1e200));
  CHECK_THROWS_AS(elemwise_mul(big, big), NumericError);
}

TEST_CASE("backward twice doubles the gradients") {
  Rng rng(2);
  Parameter w("w", random_tensor(3, 2, rng));
  Tape tape;
  const Var x = tape.constant(random_tensor(4, 3, rng));
  const Var loss = sum(elemwise_mul(matmul(x, tape.leaf(w)), matmul(x, tape.leaf(w))));
  tape.backward(loss);
  const Tensor once = w.grad;
  CHECK(w.grad_ready);
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(w.grad.data()[i] == doctest::Approx(2.0 * once.data()[i]));
  w.zero_grad();
  CHECK_FALSE(w.grad_ready);
  CHECK(w.grad.data()[0] == 0.0);
}

TEST_CASE("first adam step moves by lr times the gradient sign") {
  Parameter p("p", Tensor::from_rows({{1.0, -2.0, 0.5}}));
  p.grad = Tensor::from_rows({{3.0, -0.01, 1e-3}});
  p.grad_ready = true;
  AdamState st(0.1);
  std::vector<Parameter*> ps{&p};
  adam_step(st, ps);
  CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.value(0, 1) == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(p.value(0, 2) == doctest::Approx(0.4).epsilon(1e-4));
  CHECK(st.step == 1);
  CHECK(p.grad.data()[0] == 0.0);
}

TEST_CASE("adam matches a hand-rolled reference over several steps") {
  Rng rng(3);
  Parameter p("p", random_tensor(2, 2, rng));
  Tensor ref = p.value;
  std::vector<double> m(4, 0.0), v(4, 0.0);
  AdamState st(0.01, 0.9, 0.999, 1e-8);
  std::vector<Parameter*> ps{&p};
  for (int t = 1; t <= 5; ++t) {
    const Tensor g = random_tensor(2, 2, rng);
    p.grad = g;
    p.grad_ready = true;
    adam_step(st, ps);
    for (std::size_t i = 0; i < 4; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g.data()[i];
      v[i] = 0.999 * v[i] + 0.001 * g.data()[i] * g.data()[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      ref.data()[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK(max_rel_err(p.value, ref, 1.0) < 1e-12);
}

TEST_CASE("xavier samples stay in bounds with a centred mean") {
  const std::size_t r = 250, c = 400;
  const Tensor w = xavier_init(r, c, 17);
  const double bound = std::sqrt(6.0 / (r + c));
  double mean = 0.0;
  std::size_t outside = 0;
  for (double v : w.data()) {
    if (std::abs(v) > bound) ++outside;
    mean += v;
  }
  CHECK(outside == 0);
  mean /= static_cast<double>(w.size());
  const double sigma = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(w.size()));
  CHECK(std::abs(mean) < 3.0 * sigma);
  CHECK(testsupport::same_values(xavier_init(3, 3, 5), xavier_init(3, 3, 5)));
  CHECK_FALSE(testsupport::same_values(xavier_init(3, 3, 5), xavier_init(3, 3, 6)));
}
