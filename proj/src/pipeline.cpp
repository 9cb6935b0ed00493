#include "cosd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <set>

namespace cosd {

void RunConfig::finalize() {
  if (!hops_set) train.hops = dataset == DatasetKind::Ukp ? 2 : 3;
  train.validate();
}

MissingIdsError::MissingIdsError(std::vector<std::string> ids)
    : Error([&] {
        std::string msg = "embedding file lacks " + std::to_string(ids.size()) + " ids:";
        for (const auto& id : ids) msg += " " + id;
        return msg;
      }()),
      ids_(std::move(ids)) {}

void require_path(const std::filesystem::path& p) {
  if (p.empty()) throw IoError("no path given");
  if (!std::filesystem::exists(p)) throw IoError("missing file: " + p.string());
}

RunInputs load_inputs(const RunConfig& cfg) {
  require_path(cfg.data);
  require_path(cfg.embeddings);
  RunInputs in{load_dataset(cfg.dataset, cfg.data, cfg.load_options()),
               load_embeddings(cfg.embeddings, cfg.train.embed_dim)};
  auto missing = missing_ids(in.store, in.dataset);
  if (!missing.empty()) throw MissingIdsError(std::move(missing));
  return in;
}

std::filesystem::path default_run_dir(std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return std::filesystem::path("runs") / (std::string(buf) + "-seed" + std::to_string(seed));
}

MacroMicro evaluate(const StanceModel& model, const Dataset& ds, const EncoderStore& store,
                    Split split, ScoreMode mode, ScoreNorm norm) {
  std::vector<const Example*> rows;
  for (const Example* ex : ds.split(split)) {
    if (ex->stance != Stance::Unknown) rows.push_back(ex);
  }
  if (rows.empty()) throw Error("no labeled examples in the " + std::string(to_string(split)) + " split");
  const auto scores = predict_all(rows, store, model, mode, norm);
  std::vector<Stance> preds, golds;
  std::vector<std::string> tags;
  std::set<std::string, std::less<>> present;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    preds.push_back(scores[i].predicted);
    golds.push_back(rows[i]->stance);
    tags.push_back(rows[i]->target);
    present.insert(rows[i]->target);
  }
  std::vector<std::string> order;
  for (const auto& t : ds.targets()) {
    if (present.count(t)) order.push_back(t);
  }
  return macro_micro(preds, golds, tags, std::span<const std::string>(order));
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
}

std::string format_epoch(const EpochLog& e) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu,%.6f,%.4f,%.4f\n", e.epoch, e.loss, e.val_macro, e.val_micro);
  return buf;
}

TrialOutcome run_one(const RunConfig& cfg, const RunInputs& in, const std::filesystem::path& out,
                     std::size_t t, std::ostream* log) {
  TrialOutcome o;
  o.index = t;
  const std::uint64_t seed = trial_seed(cfg.train.seed, t);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  o.dir = out / ("trial" + std::to_string(t + 1) + "-seed" + std::to_string(seed));
  std::filesystem::create_directories(o.dir);

  const TopicTriples triples = fit_topic_triples(in.dataset, tc, seed);
  o.result = train(in.dataset, in.store, triples, tc, seed, [&](const EpochLog& e) {
    if (log) *log << "trial " << t + 1 << " epoch " << format_epoch(e);
  });
  o.result.model.save(o.dir / "model");

  std::string csv = "epoch,loss,val_macf,val_micf\n";
  for (const auto& e : o.result.log) csv += format_epoch(e);
  write_file(o.dir / "epochs.csv", csv);
  o.test = evaluate(o.result.model, in.dataset, in.store, Split::Test, cfg.mode, cfg.norm);
  write_file(o.dir / "report.txt", report(std::span(&o.test, 1)).render_text());
  return o;
}

}  // namespace

RunSummary run_trials(const RunConfig& cfg, const RunInputs& in, const std::filesystem::path& out,
                      std::ostream* log) {
  std::filesystem::create_directories(out);
  RunSummary summary;
  const std::size_t n = cfg.train.trials;
  if (cfg.parallel_trials && n > 1) {
    std::vector<std::future<TrialOutcome>> jobs;
    for (std::size_t t = 0; t < n; ++t) {
      jobs.push_back(std::async(std::launch::async, run_one, std::cref(cfg), std::cref(in),
                                std::cref(out), t, nullptr));
    }
    for (auto& j : jobs) summary.trials.push_back(j.get());
  } else {
    for (std::size_t t = 0; t < n; ++t) summary.trials.push_back(run_one(cfg, in, out, t, log));
  }
  std::vector<MacroMicro> tests;
  for (const auto& o : summary.trials) tests.push_back(o.test);
  summary.report = report(tests);
  write_file(out / "report.txt", summary.report.render_text());
  write_file(out / "report.csv", summary.report.render_csv());
  return summary;
}

std::vector<std::filesystem::path> find_model_dirs(const std::filesystem::path& path) {
  require_path(path);
  if (std::filesystem::exists(path / "model.json")) return {path};
  if (std::filesystem::exists(path / "model" / "model.json")) return {path / "model"};
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("trial", 0) == 0 &&
        std::filesystem::exists(entry.path() / "model" / "model.json")) {
      dirs.push_back(entry.path() / "model");
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError("missing file: no model.json under " + path.string());
  return dirs;
}

}  // namespace cosd
