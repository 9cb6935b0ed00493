#pragma once

// Run orchestration shared by the CLI and the acceptance suite.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cosd/corpus.hpp"
#include "cosd/encoder.hpp"
#include "cosd/eval.hpp"
#include "cosd/inference.hpp"
#include "cosd/training.hpp"

namespace cosd {

struct RunConfig {
  DatasetKind dataset = DatasetKind::Synthetic;
  std::filesystem::path data;
  std::filesystem::path embeddings;
  std::filesystem::path out;  // empty: runs/<timestamp>-seed<seed>
  TrainConfig train;
  bool hops_set = false;      // otherwise 3, or 2 for UKP
  ScoreMode mode = ScoreMode::Full;
  ScoreNorm norm = ScoreNorm::None;
  std::size_t val_ratio = 6;
  bool parallel_trials = false;

  void finalize();
  LoadOptions load_options() const { return {train.seed, val_ratio}; }
};

// Thrown when the embedding file lacks records the dataset needs.
class MissingIdsError : public Error {
 public:
  explicit MissingIdsError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Throws IoError naming the path when it does not exist.
void require_path(const std::filesystem::path& p);

struct RunInputs {
  Dataset dataset;
  EncoderStore store;
};
RunInputs load_inputs(const RunConfig& cfg);

std::filesystem::path default_run_dir(std::uint64_t seed);

// Metrics of `model` on the labeled examples of `split`.
MacroMicro evaluate(const StanceModel& model, const Dataset& ds, const EncoderStore& store,
                    Split split, ScoreMode mode = ScoreMode::Full,
                    ScoreNorm norm = ScoreNorm::None);

struct TrialOutcome {
  std::size_t index = 0;
  TrialResult result;
  MacroMicro test;
  std::filesystem::path dir;
};

struct RunSummary {
  std::vector<TrialOutcome> trials;
  Report report;
};

// Trains config.trials models (topic models refit per trial seed), saves each
// under <out>/trial<i>-seed<s>/ with its epoch log, evaluates on test and
// writes report.txt / report.csv into <out>. `log` receives progress lines.
RunSummary run_trials(const RunConfig& cfg, const RunInputs& in, const std::filesystem::path& out,
                      std::ostream* log = nullptr);

// Model directories under `path`: itself when it holds model.json, else its
// trial* children in name order.
std::vector<std::filesystem::path> find_model_dirs(const std::filesystem::path& path);

}  // namespace cosd
