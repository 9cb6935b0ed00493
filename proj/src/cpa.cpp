#include "cosd/cpa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cosd/binio.hpp"

namespace cosd {

EmbeddingTable make_embedding_table(const Tensor& text_init, const Tensor& topic_init,
                                    const Tensor& label_init) {
  const std::size_t d = text_init.cols();
  if (topic_init.cols() != d || label_init.cols() != d) {
    throw ShapeError("embedding blocks disagree on dimension");
  }
  if (label_init.rows() != 3) throw ShapeError("label block must have 3 rows");
  Tensor table(text_init.rows() + topic_init.rows() + 3, d);
  std::size_t r = 0;
  for (const Tensor* block : {&text_init, &topic_init, &label_init}) {
    std::copy(block->data().begin(), block->data().end(), table.row(r).begin());
    r += block->rows();
  }
  EmbeddingTable e;
  e.table = Parameter("E", std::move(table));
  e.n_text = text_init.rows();
  e.n_topic = topic_init.rows();
  return e;
}

CpaWeights make_weights(const CpaDims& dims, std::uint64_t seed) {
  CpaWeights w;
  for (std::size_t k = 0; k < dims.hops; ++k) {
    const std::size_t in = k == 0 ? dims.d0 : dims.d1;
    const std::string suffix = std::to_string(k + 1);
    w.w1.emplace_back("W1_" + suffix, xavier_init(in, dims.d1, Rng::mix(seed + 2 * k + 1)));
    w.w2.emplace_back("W2_" + suffix, xavier_init(in, dims.d1, Rng::mix(seed + 2 * k + 2)));
  }
  return w;
}

std::vector<Parameter*> CpaModel::weight_params() {
  std::vector<Parameter*> out;
  for (auto& p : weights.w1) out.push_back(&p);
  for (auto& p : weights.w2) out.push_back(&p);
  return out;
}

void CpaModel::save(const std::filesystem::path& path) const {
  binio::Writer w(path);
  w.magic("CPA1");
  w.u32(static_cast<std::uint32_t>(dims.d0));
  w.u32(static_cast<std::uint32_t>(dims.d1));
  w.u32(static_cast<std::uint32_t>(dims.hops));
  w.u32(static_cast<std::uint32_t>(topics_per_stance));
  w.u32(static_cast<std::uint32_t>(embeddings.n_text));
  w.f64s(embeddings.table.value.data());
  for (const auto& p : weights.w1) w.f64s(p.value.data());
  for (const auto& p : weights.w2) w.f64s(p.value.data());
  w.close();
}

CpaModel CpaModel::load(const std::filesystem::path& path, double slope) {
  binio::Reader r(path);
  r.expect_magic("CPA1");
  CpaModel m;
  m.dims.d0 = r.u32();
  m.dims.d1 = r.u32();
  m.dims.hops = r.u32();
  m.topics_per_stance = r.u32();
  m.slope = slope;
  const std::size_t n_text = r.u32();
  const std::size_t n_topic = 3 * m.topics_per_stance;
  Tensor table(n_text + n_topic + 3, m.dims.d0);
  r.f64s(table.data());
  m.embeddings.table = Parameter("E", std::move(table));
  m.embeddings.n_text = n_text;
  m.embeddings.n_topic = n_topic;
  auto read_block = [&](std::vector<Parameter>& out, const char* prefix) {
    for (std::size_t k = 0; k < m.dims.hops; ++k) {
      Tensor t(k == 0 ? m.dims.d0 : m.dims.d1, m.dims.d1);
      r.f64s(t.data());
      out.emplace_back(prefix + std::to_string(k + 1), std::move(t));
    }
  };
  read_block(m.weights.w1, "W1_");
  read_block(m.weights.w2, "W2_");
  if (!r.at_eof()) throw ParseError("trailing bytes in " + path.string());
  return m;
}

Propagation propagate(Var e0, const SparseMatrix& lap, std::span<const Var> w1,
                      std::span<const Var> w2, double slope) {
  if (w1.size() != w2.size()) throw ShapeError("propagate: W1/W2 hop counts differ");
  if (lap.rows() != e0.rows() || lap.cols() != e0.rows()) {
    throw ShapeError("propagate: laplacian " + std::to_string(lap.rows()) + "x" +
                     std::to_string(lap.cols()) + " vs " + std::to_string(e0.rows()) + " nodes");
  }
  Propagation out;
  out.min_abs_preactivation = std::numeric_limits<double>::infinity();
  Var prev = e0;
  for (std::size_t k = 0; k < w1.size(); ++k) {
    const Var self = matmul(prev, w1[k]);
    const Var neighbours = spmm(lap, self);
    const Var interaction = matmul(elemwise_mul(prev, spmm(lap, prev)), w2[k]);
    const Var pre = add(add(self, neighbours), interaction);
    for (double v : pre.value().data()) {
      out.min_abs_preactivation = std::min(out.min_abs_preactivation, std::abs(v));
    }
    prev = leaky_relu(pre, slope);
    out.layers.push_back(prev);
  }
  return out;
}

Var final_reps(Var e0, std::span<const Var> layers) {
  std::vector<Var> parts{e0};
  for (Var l : layers) {
    if (l.rows() != e0.rows()) throw ShapeError("final_reps: node counts differ");
    parts.push_back(l);
  }
  if (parts.size() == 1) return e0;
  return concat_cols(parts);
}

Tensor frozen_final_reps(const CpaModel& model, const SparseMatrix& lap) {
  Tape tape;
  const Var e0 = tape.constant(model.embeddings.table.value);
  std::vector<Var> w1, w2;
  for (const auto& p : model.weights.w1) w1.push_back(tape.constant(p.value));
  for (const auto& p : model.weights.w2) w2.push_back(tape.constant(p.value));
  const auto prop = propagate(e0, lap, w1, w2, model.slope);
  return final_reps(e0, prop.layers).value();
}

std::vector<double> one_hop_message(std::span<const double> e, std::span<const double> e_i,
                                    double deg_e, double deg_ei, const Tensor& w1,
                                    const Tensor& w2) {
  if (!(deg_e > 0.0) || !(deg_ei > 0.0)) throw Error("one_hop_message: degree must be positive");
  if (e.size() != e_i.size() || w1.rows() != e.size() || !w1.same_shape(w2)) {
    throw ShapeError("one_hop_message: shape mismatch");
  }
  const double discount = 1.0 / std::sqrt(deg_e * deg_ei);
  std::vector<double> msg(w1.cols(), 0.0);
  for (std::size_t p = 0; p < e.size(); ++p) {
    const double a = e_i[p];
    const double b = e[p] * e_i[p];
    for (std::size_t j = 0; j < msg.size(); ++j) msg[j] += a * w1(p, j) + b * w2(p, j);
  }
  for (double& v : msg) v *= discount;
  return msg;
}

Tensor infer_transform(const Tensor& x, const CpaWeights& weights, double slope) {
  std::vector<Tensor> parts{x};
  Tensor prev = x;
  for (std::size_t k = 0; k < weights.hops(); ++k) {
    const Tensor& w1 = weights.w1[k].value;
    const Tensor& w2 = weights.w2[k].value;
    if (prev.cols() != w1.rows()) {
      throw ShapeError("infer_transform: input " + prev.shape_string() + " vs W1 " +
                       w1.shape_string());
    }
    Tensor next = matmul(prev, w1);
    const Tensor b = matmul(prev, w2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double v = next.data()[i] + b.data()[i];
      next.data()[i] = v > 0.0 ? v : slope * v;
    }
    parts.push_back(next);
    prev = std::move(next);
  }
  return concat_cols(parts);
}

}  // namespace cosd
