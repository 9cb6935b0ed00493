#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cosd/common.hpp"

namespace cosd {

struct Example {
  std::string id;
  std::string text;
  std::string target;
  Stance stance = Stance::Unknown;
  Split split = Split::Train;
  std::vector<std::string> tokens;
};

class Vocabulary {
 public:
  Vocabulary() = default;

  // Indices follow first appearance; document frequency counts each doc once.
  static Vocabulary build(const std::vector<const std::vector<std::string>*>& docs);

  std::optional<std::size_t> index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t doc_freq(std::size_t index) const { return doc_freq_.at(index); }
  std::size_t size() const { return tokens_.size(); }

  // Drops tokens outside the vocabulary.
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

  // Internal use by the LDA1 reader.
  static Vocabulary from_tokens(std::vector<std::string> tokens,
                                std::vector<std::size_t> doc_freq);

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> doc_freq_;
};

class Dataset {
 public:
  Dataset() = default;

  // Validates invariants, tokenizes every text, sorts targets and builds the
  // vocabulary from the train split.
  static Dataset assemble(std::vector<Example> examples);

  const std::vector<Example>& examples() const { return examples_; }
  const std::vector<std::string>& targets() const { return targets_; }
  const Vocabulary& vocab() const { return vocab_; }

  const Example* find(std::string_view id) const;
  std::vector<const Example*> split(Split s) const;
  std::vector<const Example*> split(Split s, std::string_view target) const;
  bool has_target(std::string_view target) const;

 private:
  std::vector<Example> examples_;
  std::vector<std::string> targets_;
  Vocabulary vocab_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class DatasetKind { SemEval, Ukp, Synthetic };
std::optional<DatasetKind> parse_dataset_kind(std::string_view s);

struct LoadOptions {
  std::uint64_t seed = 42;
  // SemEval ships no validation split; hold out 1/ratio of train when > 0.
  std::size_t val_ratio = 6;
};

// Directory holding the official train and test files (names containing
// "train" / "test"), header row, columns ID, Target, Tweet, Stance.
Dataset load_semeval(const std::filesystem::path& path, const LoadOptions& opts = {});
// File or directory of per-topic TSVs with topic, sentence, annotation, set columns.
Dataset load_ukp(const std::filesystem::path& path);
// id, target, text, stance, split columns. `path` may be the file or a directory
// containing data.tsv.
Dataset load_synthetic(const std::filesystem::path& path);
Dataset load_dataset(DatasetKind kind, const std::filesystem::path& path,
                     const LoadOptions& opts = {});

// Rows with id, target, text and optional stance/split columns (split defaults to test).
std::vector<Example> read_example_tsv(const std::filesystem::path& path);
void write_example_tsv(const std::filesystem::path& path, const std::vector<Example>& rows);

std::vector<std::string> tokenize(std::string_view text);
bool is_stopword(std::string_view token);

using StanceSubsets = std::array<std::vector<const Example*>, kNumStances>;
// Train-split examples of `target`, indexed by Favor/None/Against.
StanceSubsets stance_subsets(const Dataset& ds, std::string_view target);

// Short column label for known benchmark targets (AT, CC, ... AB, CL, ...).
std::string target_abbreviation(std::string_view target);

}  // namespace cosd
