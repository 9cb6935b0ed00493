#include "cosd/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "cosd/kernels.hpp"

namespace cosd {
namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  kernels::active().axpy(alpha, x.data().data(), y.data().data(), x.size());
}

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) throw Error(std::string(op) + ": vars on different tapes");
  return *a.tape;
}

double stable_logsigmoid(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  nodes_.push_back(Node{std::move(value), {}, nullptr, {}, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Parameter& param) {
  nodes_.push_back(Node{param.value, {}, &param, {}, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> parents, BackwardFn backward, const char* op) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_[p.id].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, nullptr, needs ? std::move(backward) : BackwardFn{}, needs});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error("backward: var from another tape");
  const Tensor& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + lv.shape_string());
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_slot(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    // Closures only write grads of earlier nodes, so n.grad stays put.
    n.backward(*this, n.grad);
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.param == nullptr) continue;
    if (!n.grad.empty()) axpy(1.0, n.grad, n.param->grad);
    n.param->grad_ready = true;
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  Tensor out = cosd::matmul(a.value(), b.value());
  return t.record(std::move(out), {a, b},
                  [a, b](Tape& tape, const Tensor& g) {
                    const auto& k = kernels::active();
                    const Tensor& av = a.value();
                    const Tensor& bv = b.value();
                    if (tape.needs_grad(a)) {
                      k.gemm_nt(g.rows(), bv.rows(), g.cols(), g.data().data(), bv.data().data(),
                                tape.grad_slot(a).data().data());
                    }
                    if (tape.needs_grad(b)) {
                      k.gemm_tn(av.cols(), g.cols(), av.rows(), av.data().data(), g.data().data(),
                                tape.grad_slot(b).data().data());
                    }
                  },
                  "matmul");
}

Var spmm(const SparseMatrix& s, Var x) {
  Tensor out = s.multiply(x.value());
  return x.tape->record(std::move(out), {x},
                        [s, x](Tape& tape, const Tensor& g) {
                          s.transposed().multiply_add(g, tape.grad_slot(x));
                        },
                        "spmm");
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = bv.rows() == 1 && av.rows() != 1 && bv.cols() == av.cols();
  require(av.same_shape(bv) || broadcast, "add", av.shape_string() + " + " + bv.shape_string());
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto src = broadcast ? bv.row(0) : bv.row(r);
    kernels::active().axpy(1.0, src.data(), out.row(r).data(), out.cols());
  }
  return t.record(std::move(out), {a, b},
                  [a, b, broadcast](Tape& tape, const Tensor& g) {
                    if (tape.needs_grad(a)) axpy(1.0, g, tape.grad_slot(a));
                    if (!tape.needs_grad(b)) return;
                    Tensor& gb = tape.grad_slot(b);
                    if (!broadcast) {
                      axpy(1.0, g, gb);
                      return;
                    }
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      kernels::active().axpy(1.0, g.row(r).data(), gb.row(0).data(), g.cols());
                    }
                  },
                  "add");
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require(a.value().same_shape(b.value()), "sub",
          a.value().shape_string() + " - " + b.value().shape_string());
  Tensor out = a.value();
  axpy(-1.0, b.value(), out);
  return t.record(std::move(out), {a, b},
                  [a, b](Tape& tape, const Tensor& g) {
                    if (tape.needs_grad(a)) axpy(1.0, g, tape.grad_slot(a));
                    if (tape.needs_grad(b)) axpy(-1.0, g, tape.grad_slot(b));
                  },
                  "sub");
}

Var elemwise_mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "elemwise_mul");
  require(a.value().same_shape(b.value()), "elemwise_mul",
          a.value().shape_string() + " * " + b.value().shape_string());
  Tensor out(a.rows(), a.cols());
  kernels::active().hadamard(a.value().data().data(), b.value().data().data(), out.data().data(),
                             out.size());
  return t.record(std::move(out), {a, b},
                  [a, b](Tape& tape, const Tensor& g) {
                    const auto& k = kernels::active();
                    Tensor tmp(g.rows(), g.cols());
                    if (tape.needs_grad(a)) {
                      k.hadamard(g.data().data(), b.value().data().data(), tmp.data().data(), g.size());
                      axpy(1.0, tmp, tape.grad_slot(a));
                    }
                    if (tape.needs_grad(b)) {
                      k.hadamard(g.data().data(), a.value().data().data(), tmp.data().data(), g.size());
                      axpy(1.0, tmp, tape.grad_slot(b));
                    }
                  },
                  "elemwise_mul");
}

Var scale(Var a, double factor) {
  Tensor out(a.rows(), a.cols());
  axpy(factor, a.value(), out);
  return a.tape->record(std::move(out), {a},
                        [a, factor](Tape& tape, const Tensor& g) { axpy(factor, g, tape.grad_slot(a)); },
                        "scale");
}

Var add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.data()) v += c;
  return a.tape->record(std::move(out), {a},
                        [a](Tape& tape, const Tensor& g) { axpy(1.0, g, tape.grad_slot(a)); },
                        "add_scalar");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  Tape* t = parts[0].tape;
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (Var p : parts) {
    if (p.tape != t) throw Error("concat_cols: vars on different tapes");
    values.push_back(p.value());
  }
  Tensor out = cosd::concat_cols(values);
  std::vector<Var> parents(parts.begin(), parts.end());
  return t->record(std::move(out), parents,
                   [parents](Tape& tape, const Tensor& g) {
                     std::size_t offset = 0;
                     for (Var p : parents) {
                       const std::size_t w = p.cols();
                       if (tape.needs_grad(p)) {
                         Tensor& gp = tape.grad_slot(p);
                         for (std::size_t r = 0; r < g.rows(); ++r) {
                           kernels::active().axpy(1.0, g.row(r).data() + offset, gp.row(r).data(), w);
                         }
                       }
                       offset += w;
                     }
                   },
                   "concat_cols");
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& av = a.value();
  Tensor out(rows.size(), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < av.rows(), "gather_rows", "row index out of range");
    std::copy(av.row(rows[i]).begin(), av.row(rows[i]).end(), out.row(i).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return a.tape->record(std::move(out), {a},
                        [a, idx](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_slot(a);
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            kernels::active().axpy(1.0, g.row(i).data(), ga.row(idx[i]).data(), g.cols());
                          }
                        },
                        "gather_rows");
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  require(begin + count <= a.rows(), "slice_rows", "range out of bounds");
  Tensor out = cosd::slice_rows(a.value(), begin, count);
  return a.tape->record(std::move(out), {a},
                        [a, begin](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_slot(a);
                          kernels::active().axpy(1.0, g.data().data(), ga.row(begin).data(), g.size());
                        },
                        "slice_rows");
}

Var transpose(Var a) {
  return a.tape->record(cosd::transpose(a.value()), {a},
                        [a](Tape& tape, const Tensor& g) { axpy(1.0, cosd::transpose(g), tape.grad_slot(a)); },
                        "transpose");
}

Var leaky_relu(Var a, double slope) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  return a.tape->record(std::move(out), {a},
                        [a, slope](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_slot(a);
                          const auto x = a.value().data();
                          for (std::size_t i = 0; i < x.size(); ++i) {
                            ga.data()[i] += g.data()[i] * (x[i] > 0.0 ? 1.0 : slope);
                          }
                        },
                        "leaky_relu");
}

Var softmax_rows(Var a) {
  Tensor out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  return a.tape->record(out, {a},
                        [a, out](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_slot(a);
                          for (std::size_t r = 0; r < out.rows(); ++r) {
                            const auto y = out.row(r);
                            const auto gr = g.row(r);
                            const double inner = kernels::active().dot(y.data(), gr.data(), y.size());
                            auto dst = ga.row(r);
                            for (std::size_t c = 0; c < y.size(); ++c) dst[c] += y[c] * (gr[c] - inner);
                          }
                        },
                        "softmax_rows");
}

Var cosine_sim(Var a, Var b) {
  Tape& t = same_tape(a, b, "cosine_sim");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.same_shape(bv), "cosine_sim", av.shape_string() + " vs " + bv.shape_string());
  const auto& k = kernels::active();
  const std::size_t n = av.rows(), d = av.cols();
  std::vector<double> na(n), nb(n), ab(n);
  Tensor out(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    na[r] = std::sqrt(k.dot(av.row(r).data(), av.row(r).data(), d));
    nb[r] = std::sqrt(k.dot(bv.row(r).data(), bv.row(r).data(), d));
    if (na[r] == 0.0 || nb[r] == 0.0) throw NumericError("cosine_sim: zero-norm row");
    ab[r] = k.dot(av.row(r).data(), bv.row(r).data(), d);
    out(r, 0) = ab[r] / (na[r] * nb[r]);
  }
  return t.record(std::move(out), {a, b},
                  [a, b, na, nb, ab](Tape& tape, const Tensor& g) {
                    const Tensor& av = a.value();
                    const Tensor& bv = b.value();
                    const auto& k = kernels::active();
                    const std::size_t d = av.cols();
                    for (std::size_t r = 0; r < av.rows(); ++r) {
                      const double c = ab[r] / (na[r] * nb[r]);
                      const double inv = g(r, 0) / (na[r] * nb[r]);
                      // d cos / d a = b / (|a||b|) - cos * a / |a|^2
                      if (tape.needs_grad(a)) {
                        double* ga = tape.grad_slot(a).row(r).data();
                        k.axpy(inv, bv.row(r).data(), ga, d);
                        k.axpy(-g(r, 0) * c / (na[r] * na[r]), av.row(r).data(), ga, d);
                      }
                      if (tape.needs_grad(b)) {
                        double* gb = tape.grad_slot(b).row(r).data();
                        k.axpy(inv, av.row(r).data(), gb, d);
                        k.axpy(-g(r, 0) * c / (nb[r] * nb[r]), bv.row(r).data(), gb, d);
                      }
                    }
                  },
                  "cosine_sim");
}

Var logsigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = stable_logsigmoid(v);
  return a.tape->record(std::move(out), {a},
                        [a](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_slot(a);
                          const auto x = a.value().data();
                          for (std::size_t i = 0; i < x.size(); ++i) ga.data()[i] += g.data()[i] * sigmoid(-x[i]);
                        },
                        "logsigmoid");
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape->record(Tensor(1, 1, s), {a},
                        [a](Tape& tape, const Tensor& g) {
                          for (double& v : tape.grad_slot(a).data()) v += g(0, 0);
                        },
                        "sum");
}

Var mean(Var a) {
  if (a.value().empty()) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_sum(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (double v : av.row(r)) out(r, 0) += v;
  }
  return a.tape->record(std::move(out), {a},
                        [a](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_slot(a);
                          for (std::size_t r = 0; r < ga.rows(); ++r) {
                            for (double& v : ga.row(r)) v += g(r, 0);
                          }
                        },
                        "row_sum");
}

void adam_step(AdamState& state, std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (!p->grad_ready) throw Error("adam_step: parameter '" + p->name + "' has no gradient");
  }
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) throw Error("adam_step: parameter list changed");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!state.m[i].same_shape(p.value)) throw ShapeError("adam_step: moment shape mismatch");
    auto w = p.value.data();
    const auto g = p.grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    p.zero_grad();
  }
}

Tensor xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ShapeError("xavier_init: zero dimension");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace cosd
