#include <doctest.h>

#include "cosd/eval.hpp"
#include "support.hpp"

using namespace cosd;

namespace {

constexpr Stance F = Stance::Favor, N = Stance::None, A = Stance::Against;

// Independent count-based F1 for one class.
double f1_of(const std::vector<Stance>& p, const std::vector<Stance>& g, Stance c) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == c && g[i] == c) ++tp;
    if (p[i] == c && g[i] != c) ++fp;
    if (p[i] != c && g[i] == c) ++fn;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

}  // namespace

TEST_CASE("f_avg of the worked example is 7/12") {
  const std::vector<Stance> golds{F, F, A, A, N}, preds{F, A, A, N, N};
  CHECK(f_avg(preds, golds) == 7.0 / 12.0);
  const auto c = confusion(preds, golds);
  CHECK(c[0].tp == 1);
  CHECK(c[0].fn == 1);
  CHECK(c[2].fp == 1);
  CHECK(c[1].tp == 1);
  CHECK(c[1].fp == 1);
}

TEST_CASE("f_avg edge cases") {
  const std::vector<Stance> nones{N, N, N};
  CHECK(f_avg(nones, nones) == 0.0);
  const std::vector<Stance> perfect{F, A, N};
  CHECK(f_avg(perfect, perfect) == 1.0);
  CHECK(ClassCounts{}.precision() == 0.0);
  CHECK(ClassCounts{}.f1() == 0.0);
  const std::vector<Stance> shorter{F};
  CHECK_THROWS(f_avg(shorter, perfect));
}

TEST_CASE("f_avg matches the count formula on random labels") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Stance> p, g;
    for (int i = 0; i < 40; ++i) {
      p.push_back(stance_at(rng.below(3)));
      g.push_back(stance_at(rng.below(3)));
    }
    CHECK(f_avg(p, g) == doctest::Approx((f1_of(p, g, F) + f1_of(p, g, A)) / 2.0));
  }
}

TEST_CASE("macro averages per target, micro pools counts") {
  const std::vector<Stance> preds{F, A, F, F, A, N}, golds{F, A, A, F, N, N};
  const std::vector<std::string> tags{"x", "x", "x", "y", "y", "y"};
  const auto mm = macro_micro(preds, golds, tags);
  const std::vector<Stance> px{F, A, F}, gx{F, A, A}, py{F, A, N}, gy{F, N, N};
  const double fx = f_avg(px, gx), fy = f_avg(py, gy);
  REQUIRE(mm.per_target.size() == 2);
  CHECK(mm.per_target[0].target == "x");
  CHECK(mm.per_target[0].f_avg == doctest::Approx(fx));
  CHECK(mm.macro == doctest::Approx((fx + fy) / 2.0));
  CHECK(mm.micro == doctest::Approx(f_avg(preds, golds)));

  const std::vector<std::string> order{"y", "x"};
  const auto ordered = macro_micro(preds, golds, tags, std::span<const std::string>(order));
  CHECK(ordered.per_target[0].target == "y");
  const std::vector<std::string> missing{"x", "z"};
  CHECK_THROWS(macro_micro(preds, golds, tags, std::span<const std::string>(missing)));
}

TEST_CASE("report means and rendering") {
  MacroMicro a, b;
  a.per_target = {{"Atheism", 0.5}, {"zeta", 0.7}};
  a.macro = 0.6;
  a.micro = 0.65;
  b.per_target = {{"Atheism", 0.7}, {"zeta", 0.9}};
  b.macro = 0.8;
  b.micro = 0.75;
  const std::vector<MacroMicro> trials{a, b};
  const auto r = report(trials);
  CHECK(r.mean.macro == doctest::Approx(0.7));
  CHECK(r.mean.micro == doctest::Approx(0.7));
  CHECK(r.mean.per_target[1].f_avg == doctest::Approx(0.8));
  CHECK(r.render_csv() ==
        "run,AT,zeta,MacF_avg,MicF_avg\n"
        "trial1,0.5000,0.7000,0.6000,0.6500\n"
        "trial2,0.7000,0.9000,0.8000,0.7500\n"
        "mean,0.6000,0.8000,0.7000,0.7000\n");
  const auto text = r.render_text();
  CHECK(text.find("MacF_avg") != std::string::npos);
  CHECK(text.find("mean  ") == text.rfind('\n', text.size() - 2) + 1);
  b.per_target[1].target = "other";
  const std::vector<MacroMicro> clash{a, b};
  CHECK_THROWS(report(clash));
  CHECK_THROWS(report(std::span<const MacroMicro>()));
}
