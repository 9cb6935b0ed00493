#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "cosd/common.hpp"
#include "cosd/cpa.hpp"
#include "cosd/numerics.hpp"
#include "cosd/sparse.hpp"
#include "cosd/tensor.hpp"

namespace testsupport {

using cosd::Rng;
using cosd::Tensor;

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

inline bool same_values(const Tensor& a, const Tensor& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const Tensor& a, const Tensor& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, rel_err(a.data()[i], b.data()[i], floor));
  }
  return worst;
}

// Symmetric non-negative weighted adjacency on n nodes with some isolated nodes.
inline Tensor random_adjacency(std::size_t n, Rng& rng, double density = 0.4) {
  Tensor a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < density) a(i, j) = a(j, i) = rng.uniform(0.1, 2.0);
    }
  }
  return a;
}

// Dense D^-1/2 A D^-1/2 with 1/sqrt(0) read as 0.
inline Tensor dense_normalized(const Tensor& a) {
  const std::size_t n = a.rows();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[i] += a(i, j);
  }
  Tensor l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) l(i, j) = a(i, j) / std::sqrt(d[i] * d[j]);
    }
  }
  return l;
}

// Literal per-node propagation: for every node e,
//   e' = LReLU(e W1 + sum_i a_ei / sqrt(d_e d_i) * (e_i W1 + (e . e_i) W2))
// with d the weighted degrees of the dense adjacency `a`.
inline std::vector<Tensor> node_form_propagate(const Tensor& e0, const Tensor& a,
                                               const std::vector<Tensor>& w1,
                                               const std::vector<Tensor>& w2, double slope) {
  const std::size_t n = a.rows();
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  }
  std::vector<Tensor> layers;
  Tensor prev = e0;
  for (std::size_t k = 0; k < w1.size(); ++k) {
    const std::size_t din = prev.cols(), dout = w1[k].cols();
    Tensor next(n, dout);
    for (std::size_t e = 0; e < n; ++e) {
      std::vector<double> pre(dout, 0.0);
      for (std::size_t p = 0; p < din; ++p) {
        for (std::size_t j = 0; j < dout; ++j) pre[j] += prev(e, p) * w1[k](p, j);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (a(e, i) == 0.0) continue;
        const double w = a(e, i) / std::sqrt(deg[e] * deg[i]);
        for (std::size_t p = 0; p < din; ++p) {
          const double ei = prev(i, p);
          const double inter = prev(e, p) * prev(i, p);
          for (std::size_t j = 0; j < dout; ++j) {
            pre[j] += w * (ei * w1[k](p, j) + inter * w2[k](p, j));
          }
        }
      }
      for (std::size_t j = 0; j < dout; ++j) next(e, j) = pre[j] > 0.0 ? pre[j] : slope * pre[j];
    }
    layers.push_back(next);
    prev = std::move(next);
  }
  return layers;
}

// Central differences of f with respect to every entry of p.value.
inline Tensor numeric_grad(cosd::Parameter& p, const std::function<double()>& f, double h = 1e-5) {
  Tensor g(p.value.rows(), p.value.cols());
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double orig = p.value.data()[i];
    p.value.data()[i] = orig + h;
    const double up = f();
    p.value.data()[i] = orig - h;
    const double down = f();
    p.value.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cosd-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testsupport
