#include "cosd/eval.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>

#include "cosd/corpus.hpp"

namespace cosd {

double ClassCounts::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ClassCounts::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ClassCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ConfusionCounts confusion(std::span<const Stance> preds, std::span<const Stance> golds) {
  if (preds.size() != golds.size()) {
    throw ShapeError("metrics: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(golds.size()) + " gold labels");
  }
  ConfusionCounts c{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (golds[i] == Stance::Unknown || preds[i] == Stance::Unknown) {
      throw Error("metrics: unknown stance in predictions or gold labels");
    }
    const std::size_t p = index_of(preds[i]), g = index_of(golds[i]);
    if (p == g) {
      ++c[p].tp;
    } else {
      ++c[p].fp;
      ++c[g].fn;
    }
  }
  return c;
}

double f_avg(const ConfusionCounts& counts) {
  // F1 = 2tp / (2tp + fp + fn); both fractions are combined over integers so
  // the mean is rounded once.
  auto fraction = [](const ClassCounts& c) {
    const std::uint64_t num = 2 * c.tp;
    const std::uint64_t den = 2 * c.tp + c.fp + c.fn;
    return num == 0 ? std::pair<std::uint64_t, std::uint64_t>{0, 1} : std::pair{num, den};
  };
  const auto [nf, df] = fraction(counts[index_of(Stance::Favor)]);
  const auto [na, da] = fraction(counts[index_of(Stance::Against)]);
  return static_cast<double>(nf * da + na * df) / static_cast<double>(2 * df * da);
}

double f_avg(std::span<const Stance> preds, std::span<const Stance> golds) {
  return f_avg(confusion(preds, golds));
}

MacroMicro macro_micro(std::span<const Stance> preds, std::span<const Stance> golds,
                       std::span<const std::string> targets,
                       std::optional<std::span<const std::string>> order) {
  if (preds.size() != golds.size() || preds.size() != targets.size()) {
    throw ShapeError("macro_micro: predictions, gold labels and targets differ in length");
  }
  std::map<std::string, std::pair<std::vector<Stance>, std::vector<Stance>>> groups;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& g = groups[targets[i]];
    g.first.push_back(preds[i]);
    g.second.push_back(golds[i]);
  }
  std::vector<std::string> names;
  if (order) {
    names.assign(order->begin(), order->end());
  } else {
    for (const auto& [name, _] : groups) names.push_back(name);
  }
  if (names.empty()) throw Error("macro_micro: no targets");

  MacroMicro out;
  ConfusionCounts pooled{};
  for (const auto& name : names) {
    auto it = groups.find(name);
    if (it == groups.end() || it->second.first.empty()) {
      throw Error("macro_micro: target '" + name + "' has no examples");
    }
    const auto counts = confusion(it->second.first, it->second.second);
    for (std::size_t s = 0; s < kNumStances; ++s) {
      pooled[s].tp += counts[s].tp;
      pooled[s].fp += counts[s].fp;
      pooled[s].fn += counts[s].fn;
    }
    out.per_target.push_back({name, f_avg(counts)});
    out.macro += out.per_target.back().f_avg;
  }
  out.macro /= static_cast<double>(names.size());
  out.micro = f_avg(pooled);
  return out;
}

Report report(std::span<const MacroMicro> trials) {
  if (trials.empty()) throw Error("report: no trials");
  Report r;
  r.trials.assign(trials.begin(), trials.end());
  for (const auto& t : trials[0].per_target) r.targets.push_back(t.target);
  r.mean.per_target.resize(r.targets.size());
  for (std::size_t i = 0; i < r.targets.size(); ++i) r.mean.per_target[i].target = r.targets[i];
  for (const auto& t : trials) {
    if (t.per_target.size() != r.targets.size()) throw Error("report: trials disagree on targets");
    for (std::size_t i = 0; i < r.targets.size(); ++i) {
      if (t.per_target[i].target != r.targets[i]) throw Error("report: trials disagree on targets");
      r.mean.per_target[i].f_avg += t.per_target[i].f_avg;
    }
    r.mean.macro += t.macro;
    r.mean.micro += t.micro;
  }
  const double n = static_cast<double>(trials.size());
  for (auto& t : r.mean.per_target) t.f_avg /= n;
  r.mean.macro /= n;
  r.mean.micro /= n;
  return r;
}

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::pair<std::string, const MacroMicro*>> report_rows(const Report& r) {
  std::vector<std::pair<std::string, const MacroMicro*>> rows;
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    rows.emplace_back("trial" + std::to_string(i + 1), &r.trials[i]);
  }
  rows.emplace_back("mean", &r.mean);
  return rows;
}

}  // namespace

std::string Report::render_text() const {
  std::vector<std::string> header{"Run"};
  for (const auto& t : targets) header.push_back(target_abbreviation(t));
  header.push_back("MacF_avg");
  header.push_back("MicF_avg");

  std::vector<std::vector<std::string>> cells{header};
  for (const auto& [name, mm] : report_rows(*this)) {
    std::vector<std::string> row{name};
    for (const auto& t : mm->per_target) row.push_back(fmt4(t.f_avg));
    row.push_back(fmt4(mm->macro));
    row.push_back(fmt4(mm->micro));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        out << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string Report::render_csv() const {
  std::ostringstream out;
  out << "run";
  for (const auto& t : targets) out << ',' << target_abbreviation(t);
  out << ",MacF_avg,MicF_avg\n";
  for (const auto& [name, mm] : report_rows(*this)) {
    out << name;
    for (const auto& t : mm->per_target) out << ',' << fmt4(t.f_avg);
    out << ',' << fmt4(mm->macro) << ',' << fmt4(mm->micro) << '\n';
  }
  return out.str();
}

}  // namespace cosd
