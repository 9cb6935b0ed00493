#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cosd/common.hpp"

namespace cosd {

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // Zero denominators give 0 for P, R and F.
  double precision() const;
  double recall() const;
  double f1() const;
};

// Per-class counts for Favor / None / Against.
using ConfusionCounts = std::array<ClassCounts, kNumStances>;

ConfusionCounts confusion(std::span<const Stance> preds, std::span<const Stance> golds);

// (F_favor + F_against) / 2; None is not scored.
double f_avg(const ConfusionCounts& counts);
double f_avg(std::span<const Stance> preds, std::span<const Stance> golds);

struct TargetScore {
  std::string target;
  double f_avg = 0.0;
};

struct MacroMicro {
  double macro = 0.0;  // mean of per-target F_avg
  double micro = 0.0;  // F_avg of the pooled counts
  std::vector<TargetScore> per_target;
};

// `targets[i]` tags example i. `order`, when given, fixes the per-target
// ordering and every listed target must have examples.
MacroMicro macro_micro(std::span<const Stance> preds, std::span<const Stance> golds,
                       std::span<const std::string> targets,
                       std::optional<std::span<const std::string>> order = std::nullopt);

// Mean over trials, rendered with one column per target plus MacF/MicF.
struct Report {
  std::vector<std::string> targets;
  std::vector<MacroMicro> trials;
  MacroMicro mean;

  std::string render_text() const;
  std::string render_csv() const;
};

Report report(std::span<const MacroMicro> trials);

}  // namespace cosd
