// cosd: topics | train | predict | eval | inspect | synth

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cosd/graph.hpp"
#include "cosd/inference.hpp"
#include "cosd/kernels.hpp"
#include "cosd/pipeline.hpp"
#include "cosd/synth.hpp"
#include "cosd/topics.hpp"

namespace {

using namespace cosd;

struct Cli {
  RunConfig run;
  std::string dataset = "synthetic";
  std::string mode = "full";
  std::string norm = "none";
  std::string simd;

  // topics
  std::string h_range = "3:7";
  std::string topics_csv;
  // eval / predict / inspect
  std::string model;
  std::string split = "test";
  std::string in_tsv;
  std::string out_tsv;
  std::string target;
  std::string dump_graph;
  std::string dump_reps;
  std::string attention_id;
  std::string attention_out = "attention.csv";
  std::string topk_id;
  std::size_t k = 2;
  // synth
  SynthOptions synth;
};

[[noreturn]] void usage_error(const std::string& msg) { throw CLI::ValidationError(msg); }

void add_run_options(CLI::App& app, Cli& c) {
  auto& t = c.run.train;
  app.add_option("--dataset", c.dataset, "semeval | ukp | synthetic")->capture_default_str();
  app.add_option("--data", c.run.data, "dataset file or directory");
  app.add_option("--emb,--embeddings", c.run.embeddings, "EMB1 embedding file");
  app.add_option("--out", c.run.out, "output directory or file");
  app.add_option("--topics,-H", t.topics, "topics per stance subset")->capture_default_str();
  app.add_option("--hops,-l", t.hops, "propagation hops (default 3, 2 for ukp)")
      ->each([&c](const std::string&) { c.run.hops_set = true; });
  app.add_option("--lda-alpha,--lda_alpha", t.lda_alpha, "document-topic prior (<= 0: 50/H)");
  app.add_option("--lda-beta,--lda_beta", t.lda_beta, "topic-word prior")->capture_default_str();
  app.add_option("--lda-sweeps,--lda_sweeps", t.lda_sweeps, "Gibbs sweeps")->capture_default_str();
  app.add_option("--fold-in-sweeps,--fold_in_sweeps", t.fold_in_sweeps)->capture_default_str();
  app.add_option("--lr-cpa,--lr_cpa", t.lr_cpa)->capture_default_str();
  app.add_option("--lr-embed,--lr_embed", t.lr_embed)->capture_default_str();
  app.add_option("--dropout", t.dropout)->capture_default_str();
  app.add_option("--batch-size,--batch_size,--batch", t.batch_size)->capture_default_str();
  app.add_option("--epochs", t.epochs)->capture_default_str();
  app.add_option("--hidden-dim,--hidden_dim", t.hidden_dim)->capture_default_str();
  app.add_option("--embed-dim,--embed_dim", t.embed_dim)->capture_default_str();
  app.add_option("--seed", t.seed, "base seed (COSD_SEED overrides)")->capture_default_str();
  app.add_option("--trials", t.trials)->capture_default_str();
  app.add_flag("--joint", t.joint, "one topic triple and graph over all targets");
  app.add_option("--mode", c.mode, "full | no_sem | no_dis")->capture_default_str();
  app.add_option("--score-norm,--score_norm", c.norm, "none | zscore")->capture_default_str();
  app.add_option("--val-ratio,--val_ratio", c.run.val_ratio,
                 "SemEval: hold out 1/ratio of train for validation (0 disables)")
      ->capture_default_str();
  app.add_flag("--parallel-trials,--parallel_trials", c.run.parallel_trials);
  app.add_option("--simd", c.simd, "scalar | avx2 (default: best available)");
}

void finalize(Cli& c) {
  const auto kind = parse_dataset_kind(c.dataset);
  if (!kind) usage_error("unknown dataset '" + c.dataset + "'");
  c.run.dataset = *kind;
  const auto mode = parse_score_mode(c.mode);
  if (!mode) usage_error("unknown mode '" + c.mode + "'");
  c.run.mode = *mode;
  const auto norm = parse_score_norm(c.norm);
  if (!norm) usage_error("unknown score norm '" + c.norm + "'");
  c.run.norm = *norm;
  if (const char* env = std::getenv("COSD_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') usage_error("COSD_SEED must be an unsigned integer");
    c.run.train.seed = v;
  }
  if (c.simd == "scalar") {
    kernels::force_simd(kernels::SimdLevel::Scalar);
  } else if (c.simd == "avx2") {
    if (!kernels::avx2_table()) throw Error("AVX2 kernels are not available on this machine");
    kernels::force_simd(kernels::SimdLevel::Avx2);
  } else if (!c.simd.empty()) {
    usage_error("unknown --simd '" + c.simd + "'");
  }
  c.run.finalize();
}

std::filesystem::path out_dir(const Cli& c) {
  return c.run.out.empty() ? default_run_dir(c.run.train.seed) : c.run.out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_topics(const Cli& c) {
  const auto colon = c.h_range.find(':');
  std::size_t lo = 0, hi = 0;
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    lo = std::stoul(c.h_range.substr(0, colon));
    hi = std::stoul(c.h_range.substr(colon + 1));
  } catch (const std::exception&) {
    usage_error("--h-range expects LO:HI, got '" + c.h_range + "'");
  }
  if (lo == 0 || lo > hi) usage_error("--h-range needs 1 <= LO <= HI, got '" + c.h_range + "'");

  require_path(c.run.data);
  const Dataset ds = load_dataset(c.run.dataset, c.run.data, c.run.load_options());
  auto vocab = std::make_shared<const Vocabulary>(ds.vocab());
  const char* names[] = {"favor", "none", "against"};

  std::string csv = "target,subset,H,perplexity,umass_coherence\n";
  for (const auto& target : ds.targets()) {
    const auto subsets = stance_subsets(ds, target);
    for (std::size_t s = 0; s < kNumStances; ++s) {
      std::vector<std::vector<std::string>> docs;
      for (const Example* ex : subsets[s]) docs.push_back(ex->tokens);
      for (std::size_t h = lo; h <= hi; ++h) {
        LdaParams p = c.run.train.lda_params(Rng::mix(c.run.train.seed ^ fnv1a(target)) + s);
        p.topics = h;
        const LdaModel m = fit_lda(docs, vocab, p);
        const double ppl = docs.empty() ? 0.0
                                        : perplexity(m, docs, c.run.train.fold_in_sweeps,
                                                     c.run.train.seed);
        const double coh = umass_coherence(m, docs, 10);
        csv += target + ',' + names[s] + ',' + std::to_string(h) + ',' + fmt(ppl) + ',' +
               fmt(coh) + '\n';
      }
    }
  }
  std::cout << csv;
  if (!c.topics_csv.empty()) {
    std::ofstream out(c.topics_csv);
    if (!out) throw IoError("cannot write " + c.topics_csv);
    out << csv;
  }
  return 0;
}

int cmd_train(const Cli& c) {
  const RunInputs in = load_inputs(c.run);
  const auto dir = out_dir(c);
  std::cerr << "writing run to " << dir.string() << '\n';
  const RunSummary s = run_trials(c.run, in, dir, &std::cerr);
  std::cout << s.report.render_text();
  return 0;
}

Split parse_split_or_throw(const std::string& s) {
  const auto split = parse_split(s);
  if (!split) usage_error("unknown split '" + s + "'");
  return *split;
}

int cmd_eval(const Cli& c) {
  const auto dirs = find_model_dirs(c.model);
  const RunInputs in = load_inputs(c.run);
  const Split split = parse_split_or_throw(c.split);
  std::vector<MacroMicro> results;
  for (const auto& d : dirs) {
    const StanceModel m = StanceModel::load(d);
    results.push_back(evaluate(m, in.dataset, in.store, split, c.run.mode, c.run.norm));
  }
  const Report r = report(results);
  std::cout << r.render_text();
  if (!c.run.out.empty()) {
    std::ofstream out(c.run.out);
    if (!out) throw IoError("cannot write " + c.run.out.string());
    out << r.render_csv();
  }
  return 0;
}

int cmd_predict(const Cli& c) {
  if (c.out_tsv.empty()) usage_error("predict needs --out");
  const auto dirs = find_model_dirs(c.model);
  require_path(c.in_tsv);
  require_path(c.run.embeddings);
  const StanceModel model = StanceModel::load(dirs.front());
  const EncoderStore store = load_embeddings(c.run.embeddings, model.config.embed_dim);
  std::vector<Example> rows = read_example_tsv(c.in_tsv);
  std::vector<std::string> missing;
  for (auto& ex : rows) {
    ex.tokens = tokenize(ex.text);
    if (!store.find(ex.id)) missing.push_back(ex.id);
    if (!store.find(EncoderStore::target_key(ex.target))) {
      missing.push_back(EncoderStore::target_key(ex.target));
    }
  }
  if (!missing.empty()) throw MissingIdsError(missing);

  std::vector<const Example*> ptrs;
  for (const auto& ex : rows) ptrs.push_back(&ex);
  const auto scores = predict_all(ptrs, store, model, c.run.mode, c.run.norm);
  std::ofstream out(c.out_tsv);
  if (!out) throw IoError("cannot write " + c.out_tsv);
  out << "id\tpredicted\tsem_favor\tsem_none\tsem_against\tdis_favor\tdis_none\tdis_against\n";
  char buf[32];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << rows[i].id << '\t' << to_string(scores[i].predicted);
    for (const auto* triple : {&scores[i].sem, &scores[i].dis}) {
      for (double v : *triple) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        out << '\t' << buf;
      }
    }
    out << '\n';
  }
  return 0;
}

int cmd_inspect(const Cli& c) {
  const auto dirs = find_model_dirs(c.model);
  const StanceModel model = StanceModel::load(dirs.front());
  require_path(c.run.data);
  const Dataset ds = load_dataset(c.run.dataset, c.run.data, c.run.load_options());
  const TargetModel& part =
      c.target.empty() ? model.parts.front() : model.for_target(c.target);
  bool did = false;

  if (!c.dump_graph.empty() || !c.dump_reps.empty()) {
    const HeteroTopicGraph g = rebuild_graph(part, ds, model.config);
    if (!c.dump_graph.empty()) g.lap.write_coordinate(c.dump_graph);
    if (!c.dump_reps.empty()) {
      const Tensor reps = frozen_final_reps(part.cpa, g.lap);
      std::ofstream out(c.dump_reps);
      if (!out) throw IoError("cannot write " + c.dump_reps);
      const char* names[] = {"favor", "none", "against"};
      char buf[32];
      for (std::size_t r = 0; r < reps.rows(); ++r) {
        if (r < g.n_text) {
          out << part.train_ids[r];
        } else if (r < g.label_offset()) {
          const std::size_t h = r - g.topic_offset();
          out << "topic:" << names[h / part.cpa.topics_per_stance] << ':'
              << h % part.cpa.topics_per_stance;
        } else {
          out << "label:" << names[r - g.label_offset()];
        }
        for (double v : reps.row(r)) {
          std::snprintf(buf, sizeof buf, "%.9g", v);
          out << ' ' << buf;
        }
        out << '\n';
      }
    }
    did = true;
  }
  if (!c.attention_id.empty() || !c.topk_id.empty()) {
    require_path(c.run.embeddings);
    const EncoderStore store = load_embeddings(c.run.embeddings, model.config.embed_dim);
    if (!c.attention_id.empty()) {
      const Example* ex = ds.find(c.attention_id);
      if (!ex) throw Error("unknown example id '" + c.attention_id + "'");
      export_attention(*ex, store, c.attention_out);
    }
    if (!c.topk_id.empty()) {
      const Example* ex = ds.find(c.topk_id);
      if (!ex) throw Error("unknown example id '" + c.topk_id + "'");
      for (const auto& n : top_k_similar(*ex, c.k, store, model, ds)) {
        std::cout << n.id << '\t' << fmt(n.similarity) << '\n';
      }
    }
    did = true;
  }
  if (!did) usage_error("inspect needs --dump-graph, --dump-final-reps, --attention or --top-k");
  return 0;
}

int cmd_synth(Cli& c) {
  c.synth.seed = c.run.train.seed;
  c.synth.topics = c.run.train.topics;
  c.synth.dim = c.run.train.embed_dim;
  const auto dir = c.run.out.empty() ? std::filesystem::path("synth") : c.run.out;
  const SynthData data = generate_synthetic(c.synth);
  write_synthetic(data, c.synth, dir);
  std::cout << "wrote " << data.examples.size() << " examples to " << dir.string()
            << " (nearest-prototype accuracy " << fmt(nearest_prototype_accuracy(data)) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Cli c;
  CLI::App app{"Collaborative stance detection over implicit-topic graphs"};
  app.set_config("--config", "", "key = value configuration file");
  app.require_subcommand(1);
  add_run_options(app, c);

  auto* topics = app.add_subcommand("topics", "perplexity and coherence over a range of H");
  topics->add_option("--h-range,--h_range", c.h_range, "LO:HI")->capture_default_str();
  topics->add_option("--csv", c.topics_csv, "also write the table here");

  auto* train = app.add_subcommand("train", "fit topic models and CPA, evaluate on test");

  auto* eval = app.add_subcommand("eval", "metrics of a trained run");
  eval->add_option("--model", c.model, "run, trial or model directory")->required();
  eval->add_option("--split", c.split, "train | val | test")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "score a TSV of texts");
  predict->add_option("--model", c.model)->required();
  predict->add_option("--in", c.in_tsv, "TSV with id, target, text")->required();
  predict->add_option("--preds,--out", c.out_tsv, "output TSV")->required();

  auto* inspect = app.add_subcommand("inspect", "graph, representation and attention dumps");
  inspect->add_option("--model", c.model)->required();
  inspect->add_option("--target", c.target, "partition to inspect");
  inspect->add_option("--dump-graph", c.dump_graph, "Laplacian as row col weight lines");
  inspect->add_option("--dump-final-reps", c.dump_reps, "id and final representation per node");
  inspect->add_option("--attention", c.attention_id, "example id");
  inspect->add_option("--attention-out", c.attention_out)->capture_default_str();
  inspect->add_option("--top-k", c.topk_id, "example id");
  inspect->add_option("-k", c.k)->capture_default_str();

  auto* synth = app.add_subcommand("synth", "write a planted synthetic dataset");
  synth->add_option("--n-targets", c.synth.targets)->capture_default_str();
  synth->add_option("--n-train", c.synth.train)->capture_default_str();
  synth->add_option("--n-val", c.synth.val)->capture_default_str();
  synth->add_option("--n-test", c.synth.test)->capture_default_str();
  synth->add_option("--doc-length", c.synth.doc_length)->capture_default_str();

  for (auto* sub : {topics, train, eval, predict, inspect, synth}) sub->fallthrough();

  try {
    app.parse(argc, argv);
    finalize(c);
    if (*topics) return cmd_topics(c);
    if (*train) return cmd_train(c);
    if (*eval) return cmd_eval(c);
    if (*predict) return cmd_predict(c);
    if (*inspect) return cmd_inspect(c);
    if (*synth) return cmd_synth(c);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const cosd::IoError& e) {
    std::cerr << "cosd: " << e.what() << '\n';
    return 2;
  } catch (const cosd::MissingIdsError& e) {
    std::cerr << "cosd: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cosd: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
