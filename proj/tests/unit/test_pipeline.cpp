#include <doctest.h>

#include "cosd/pipeline.hpp"
#include "cosd/synth.hpp"
#include "support.hpp"

using namespace cosd;
using testsupport::read_text;
using testsupport::TempDir;

namespace {

SynthOptions tiny() {
  SynthOptions o;
  o.dim = 16;
  o.train = 48;
  o.val = 12;
  o.test = 12;
  o.topics = 2;
  return o;
}

RunConfig tiny_run(const TempDir& dir) {
  RunConfig c;
  c.data = dir.path();
  c.embeddings = dir / "emb.bin";
  c.train.embed_dim = 16;
  c.train.hidden_dim = 4;
  c.train.topics = 2;
  c.train.lda_sweeps = 10;
  c.train.fold_in_sweeps = 5;
  c.train.epochs = 2;
  c.train.trials = 2;
  c.train.batch_size = 16;
  return c;
}

}  // namespace

TEST_CASE("hop defaults depend on the dataset") {
  RunConfig c;
  c.dataset = DatasetKind::Ukp;
  c.finalize();
  CHECK(c.train.hops == 2);
  c.dataset = DatasetKind::SemEval;
  c.finalize();
  CHECK(c.train.hops == 3);
  c.hops_set = true;
  c.train.hops = 1;
  c.finalize();
  CHECK(c.train.hops == 1);
  c.train.epochs = 0;
  CHECK_THROWS(c.finalize());
}

TEST_CASE("input loading errors name what is missing") {
  TempDir dir("pipe-missing");
  const auto o = tiny();
  write_synthetic(generate_synthetic(o), o, dir.path());
  auto c = tiny_run(dir);
  c.embeddings = dir / "nope.bin";
  CHECK_THROWS_WITH_AS(load_inputs(c), doctest::Contains("nope.bin"), IoError);

  auto data = generate_synthetic(o);
  EncoderStore partial(16);
  for (const auto& id : data.store.ids()) {
    if (id != data.examples[3].id) partial.insert(id, *data.store.find(id));
  }
  save_embeddings(dir / "partial.bin", partial);
  c.embeddings = dir / "partial.bin";
  try {
    load_inputs(c);
    FAIL("expected MissingIdsError");
  } catch (const MissingIdsError& e) {
    CHECK(e.ids() == std::vector<std::string>{data.examples[3].id});
    CHECK(std::string(e.what()).find(data.examples[3].id) != std::string::npos);
  }
}

TEST_CASE("trials write models, logs and reports reproducibly") {
  TempDir dir("pipe-run");
  const auto o = tiny();
  write_synthetic(generate_synthetic(o), o, dir.path());
  auto c = tiny_run(dir);
  c.finalize();
  const auto in = load_inputs(c);
  const auto a = run_trials(c, in, dir / "a");
  c.parallel_trials = true;
  const auto b = run_trials(c, in, dir / "b");
  REQUIRE(a.trials.size() == 2);
  CHECK(a.trials[0].dir.filename() == "trial1-seed42");
  CHECK(a.trials[1].dir.filename().string().rfind("trial2-seed", 0) == 0);
  CHECK(read_text(dir / "a" / "report.txt") == read_text(dir / "b" / "report.txt"));
  CHECK(read_text(dir / "a" / "report.csv") == read_text(dir / "b" / "report.csv"));
  const auto epochs = read_text(a.trials[0].dir / "epochs.csv");
  CHECK(epochs.rfind("epoch,loss,val_macf,val_micf\n1,", 0) == 0);
  CHECK(std::filesystem::exists(a.trials[0].dir / "report.txt"));

  const auto dirs = find_model_dirs(dir / "a");
  REQUIRE(dirs.size() == 2);
  CHECK(find_model_dirs(a.trials[0].dir) == std::vector{a.trials[0].dir / "model"});
  CHECK(find_model_dirs(dirs[0]) == std::vector{dirs[0]});
  CHECK_THROWS_AS(find_model_dirs(dir / "missing"), IoError);

  const auto model = StanceModel::load(dirs[0]);
  const auto mm = evaluate(model, in.dataset, in.store, Split::Test);
  CHECK(mm.micro == doctest::Approx(a.trials[0].test.micro));
  CHECK(mm.per_target.size() == in.dataset.targets().size());
}

TEST_CASE("default run directory name") {
  const auto p = default_run_dir(7).string();
  CHECK(p.rfind("runs/", 0) == 0);
  CHECK(p.size() > std::string("runs/-seed7").size());
  CHECK(p.substr(p.size() - 6) == "-seed7");
}
