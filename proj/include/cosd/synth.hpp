#pragma once

// Planted three-cluster stance corpus with matching encoder vectors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cosd/corpus.hpp"
#include "cosd/encoder.hpp"
#include "cosd/tensor.hpp"

namespace cosd {

struct SynthOptions {
  std::size_t targets = 2;
  std::size_t train = 600;  // totals over all targets
  std::size_t val = 150;
  std::size_t test = 150;
  std::size_t dim = kEncoderDim;
  std::size_t topics = 5;  // planted topics per stance and target
  std::size_t words_per_topic = 8;
  std::size_t background_words = 40;
  std::size_t doc_length = 30;
  double off_topic = 0.15;     // chance a word is drawn from the background pool
  double proto_weight = 0.6;   // word vector = proto_weight * prototype + word_noise * random unit
  double word_noise = 0.8;
  double token_noise = 0.3;    // per-token perturbation norm
  std::uint64_t seed = 42;
};

struct SynthData {
  std::vector<Example> examples;
  EncoderStore store;
  Tensor prototypes;  // 3 x dim, orthonormal, shared by all targets
  // topic_words[target][stance * topics + h] lists that planted topic's words.
  std::vector<std::vector<std::vector<std::string>>> topic_words;
  std::vector<std::string> target_names;
};

SynthData generate_synthetic(const SynthOptions& opts);

// Accuracy of assigning each example the stance whose prototype has the
// largest cosine with the pooled vector.
double nearest_prototype_accuracy(const SynthData& data);

// Writes data.tsv, emb.bin and truth.json into `dir`.
void write_synthetic(const SynthData& data, const SynthOptions& opts,
                     const std::filesystem::path& dir);

}  // namespace cosd
