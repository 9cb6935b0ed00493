#pragma once

// Tape-based reverse mode over a small fixed op set, plus Adam and Xavier
// initialization. A Tape belongs to one thread; Parameters outlive tapes and
// receive accumulated gradients on backward().

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cosd/sparse.hpp"
#include "cosd/tensor.hpp"

namespace cosd {

inline constexpr double kDefaultLeakySlope = 0.01;

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)), grad(this->value.rows(), this->value.cols()) {}

  std::string name;
  Tensor value;
  Tensor grad;
  // Set by backward(), cleared by an optimizer step or zero_grad().
  bool grad_ready = false;

  void zero_grad() {
    grad.fill(0.0);
    grad_ready = false;
  }
};

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Parameter& param);

  // Seeds d(loss)/d(loss) = 1 and accumulates into every reachable Parameter.
  // Calling it twice without an optimizer step doubles the parameter grads.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() with respect to v (empty if unreached).
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;
  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward, const char* op);
  Tensor& grad_slot(Var v);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    BackwardFn backward;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// Tracked ops. Every op checks conforming shapes (ShapeError) and a finite
// result (NumericError).
Var matmul(Var a, Var b);
Var spmm(const SparseMatrix& s, Var x);
// b may be a 1 x cols row vector broadcast over the rows of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var elemwise_mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const std::size_t> rows);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var transpose(Var a);
Var leaky_relu(Var a, double slope = kDefaultLeakySlope);
Var softmax_rows(Var a);
// Row-wise cosine similarity of equally shaped a and b -> rows x 1.
Var cosine_sim(Var a, Var b);
// Elementwise log(sigmoid(x)), stable for large |x|.
Var logsigmoid(Var a);
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);

struct AdamState {
  explicit AdamState(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr(lr), beta1(beta1), beta2(beta2), eps(eps) {}

  double lr;
  double beta1;
  double beta2;
  double eps;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// Bias-corrected Adam over `params` (moments are created on the first call
// and matched by position afterwards). Zeroes the gradients afterwards.
void adam_step(AdamState& state, std::span<Parameter* const> params);

// Uniform on +-sqrt(6 / (rows + cols)).
Tensor xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace cosd
