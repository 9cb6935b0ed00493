#pragma once

// Precomputed sentence-encoder vectors (EMB1 files).
//
// EMB1 layout, little-endian:
//   "EMB1" | u32 record count | u32 dim
//   per record: u32 id byte length | UTF-8 id | u32 row count T | T*dim f32
// Row 0 of every record is the pooled vector. Rows 1..T-1, when present, are
// per-token states; a record with T = 1 is pooled-only and its single row also
// serves as the token matrix. Targets and labels are stored as records with
// ids "target:<name>" and "label:<favor|none|against>".

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cosd/common.hpp"
#include "cosd/corpus.hpp"
#include "cosd/tensor.hpp"

namespace cosd {

inline constexpr std::size_t kEncoderDim = 768;

struct EncoderRecord {
  std::size_t rows = 0;
  std::vector<float> data;  // rows x dim

  std::vector<double> pooled(std::size_t dim) const;
  Tensor token_matrix(std::size_t dim) const;
};

class EncoderStore {
 public:
  explicit EncoderStore(std::size_t dim = kEncoderDim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return order_.size(); }
  const std::vector<std::string>& ids() const { return order_; }

  void insert(std::string id, EncoderRecord record);
  const EncoderRecord* find(std::string_view id) const;
  // Throws Error naming the id when absent.
  const EncoderRecord& at(std::string_view id) const;

  std::vector<double> pooled(std::string_view id) const { return at(id).pooled(dim_); }
  Tensor tokens(std::string_view id) const { return at(id).token_matrix(dim_); }

  static std::string target_key(std::string_view target);
  static std::string label_key(Stance s);

 private:
  std::size_t dim_;
  std::unordered_map<std::string, EncoderRecord> records_;
  std::vector<std::string> order_;
};

// Validates the header dimension against `expected_dim`.
EncoderStore load_embeddings(const std::filesystem::path& path,
                             std::size_t expected_dim = kEncoderDim);
void save_embeddings(const std::filesystem::path& path, const EncoderStore& store);

// Example ids, target keys and label keys the dataset needs but the store lacks.
std::vector<std::string> missing_ids(const EncoderStore& store, const Dataset& ds);

}  // namespace cosd
