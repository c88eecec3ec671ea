#include <doctest.h>

#include <map>
#include <random>

#include "mgt/global_rules.hpp"
#include "oracles.hpp"

using namespace mgt;

namespace {

StatVector stats_of(double a, double b, double c, double d, double e) {
  StatVector s;
  s.z << a, b, c, d, e;
  s.hop = 1;
  return s;
}

std::vector<LabelledStats> random_training(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<LabelledStats> out;
  for (int i = 0; i < n; ++i) {
    // coarse values so that some land exactly on thresholds
    auto v = [&] { return std::round(u(rng) * 4.0) / 4.0; };
    out.push_back({stats_of(v(), v(), v(), v(), v()), coin(rng) ? Label::machine : Label::human});
  }
  out[0].label = Label::machine;
  out[1].label = Label::human;
  return out;
}

}  // namespace

TEST_CASE("global_statistics hand case") {
  const Eigen::VectorXd late = (Eigen::VectorXd(5) << 1, 2, 3, 4, 5).finished();
  const StatVector s = global_statistics(late, 0);
  CHECK_FALSE(s.degenerate);
  CHECK(s.hop == 2);
  CHECK(s.z[0] == 2.0);
  CHECK(s.z[1] == 0.0);
  CHECK(s.z[2] == 1.0);
  CHECK(s.z[3] == 0.0);
  CHECK(s.z[4] == 2.0);

  // the same latter part behind an arbitrary prefix
  Eigen::VectorXd full(25);
  full.head(20).setLinSpaced(-7.0, 40.0);
  full.tail(5) = late;
  const StatVector t = global_statistics(full, 20);
  CHECK(t.z == s.z);
  CHECK(t.hop == 2);
}

TEST_CASE("global_statistics of a constant latter part") {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(30, -1.25);
  d.head(20).setLinSpaced(0.0, 5.0);
  const StatVector s = global_statistics(d, 20);
  CHECK_FALSE(s.degenerate);
  CHECK(s.z.isZero(0.0));
}

TEST_CASE("global_statistics is degenerate for short latter parts") {
  const StatVector s = global_statistics(Eigen::VectorXd::LinSpaced(22, 0.0, 1.0), 20);
  CHECK(s.degenerate);
  CHECK(s.z.isZero(0.0));
  CHECK_FALSE(global_statistics(Eigen::VectorXd::LinSpaced(24, 0.0, 1.0), 20).degenerate);
  CHECK(global_statistics(Eigen::VectorXd::LinSpaced(5, 0.0, 1.0), 20).degenerate);
}

TEST_CASE("global_statistics is shift equivariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd d(30 + trial);
    for (auto& x : d) x = g(rng);
    const double c = 3.0 * g(rng);
    const StatVector a = global_statistics(d, 20);
    const StatVector b = global_statistics((d.array() + c).matrix(), 20);
    CHECK(b.z[0] == doctest::Approx(a.z[0]).epsilon(1e-9));
    CHECK(b.z.tail(4).isApprox(a.z.tail(4), 1e-9));
  }
}

TEST_CASE("fit_thresholds formula") {
  const ThresholdGrid g = fit_thresholds({stats_of(0, 0, 0, 0, 0), stats_of(10, 1, 2, 3, 4)}, 11);
  REQUIRE(g.stats[0].thresholds.size() == 10);
  for (int j = 1; j <= 10; ++j) CHECK(g.stats[0].thresholds[j - 1] == j - 1);
  CHECK(g.stats[0].buckets() == 11);

  const ThresholdGrid two = fit_thresholds({stats_of(-1, 0, 0, 0, 0), stats_of(3, 1, 2, 3, 4)}, 2);
  REQUIRE(two.stats[0].thresholds.size() == 1);
  CHECK(two.stats[0].thresholds[0] == -1.0);
}

TEST_CASE("fit_thresholds errors and collapse") {
  CHECK_THROWS_AS(fit_thresholds({stats_of(0, 0, 0, 0, 0)}, 10), FitError);
  StatVector degenerate;
  degenerate.degenerate = true;
  CHECK_THROWS_AS(fit_thresholds({stats_of(0, 0, 0, 0, 0), degenerate}, 10), FitError);
  CHECK_THROWS_AS(fit_thresholds({stats_of(0, 0, 0, 0, 0), stats_of(1, 1, 1, 1, 1)}, 1), FitError);

  const ThresholdGrid g = fit_thresholds({stats_of(7, 0, 0, 0, 0), stats_of(7, 1, 1, 1, 1)}, 10);
  CHECK(g.stats[0].collapsed);
  CHECK_FALSE(g.stats[1].collapsed);
  for (double z : {-100.0, 7.0, 100.0}) CHECK(assign_atom(z, g.stats[0]) == 10);
}

TEST_CASE("assign_atom") {
  const ThresholdGrid g = fit_thresholds({stats_of(0, 0, 0, 0, 0), stats_of(10, 1, 1, 1, 1)}, 11);
  const auto& grid = g.stats[0];
  CHECK(assign_atom(0.0, grid) == 1);
  CHECK(assign_atom(-5.0, grid) == 1);
  CHECK(assign_atom(4.5, grid) == 6);
  CHECK(assign_atom(4.0, grid) == 5);
  CHECK(assign_atom(9.0, grid) == 10);
  CHECK(assign_atom(9.5, grid) == 11);
  CHECK(assign_atom(1e9, grid) == 11);
}

TEST_CASE("generate_rule and rule_prior") {
  const ThresholdGrid g = fit_thresholds({stats_of(0, 0, 0, 0, 0), stats_of(1, 1, 1, 1, 1)}, 10);
  const StatVector s = stats_of(0.5, 0.0, 1.0, 0.2, 0.9);
  const Rule r = generate_rule(s, g);
  REQUIRE(r.atoms.size() == kNumStatistics);
  for (int m = 0; m < kNumStatistics; ++m) CHECK(r.atoms[m].statistic == m);
  CHECK(generate_rule(s, g) == r);
  CHECK(rule_prior(r, g) == 1);

  Rule doubled = r;
  doubled.atoms[1].statistic = 0;
  CHECK(rule_prior(doubled, g) == 0);
  Rule short_rule = r;
  short_rule.atoms.pop_back();
  CHECK(rule_prior(short_rule, g) == 0);
  Rule out_of_range = r;
  out_of_range.atoms[2].bucket = 11;
  CHECK(rule_prior(out_of_range, g) == 0);

  StatVector degenerate;
  degenerate.degenerate = true;
  CHECK_THROWS_AS(generate_rule(degenerate, g), ValidationError);
}

TEST_CASE("atom support counts match a from-scratch re-binning") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto train = random_training(rng, 5 + trial * 3);
    const int K = 2 + trial % 9;
    const RuleModel model = fit_rule_model(train, K, 20);

    const auto expected = oracle::rebin(train, K);
    for (int m = 0; m < kNumStatistics; ++m)
      for (int bucket = 1; bucket <= K; ++bucket) {
        const auto& want = expected[m][bucket - 1];
        const AtomCount& c = model.table.at({m, bucket});
        CHECK(c.n == want.n);
        CHECK(c.machine == want.machine);
        CHECK(c.support() == oracle::support(want));
      }
  }
}

TEST_CASE("atom support ratio and neutral fallback") {
  AtomCount c{4, 3};
  CHECK(c.support() == 0.75);
  CHECK(AtomCount{}.support() == 0.5);
}

TEST_CASE("rule_support averages atom supports") {
  RuleModel model;
  model.grid = fit_thresholds({stats_of(0, 0, 0, 0, 0), stats_of(1, 1, 1, 1, 1)}, 2);
  const double supports[kNumStatistics] = {0.75, 0.5, 1.0, 0.25, 0.5};
  const AtomCount counts[kNumStatistics] = {{4, 3}, {2, 1}, {5, 5}, {4, 1}, {0, 0}};
  for (int m = 0; m < kNumStatistics; ++m) {
    model.table.counts[m] = {counts[m], AtomCount{}};
    CHECK(model.table.counts[m][0].support() == supports[m]);
  }
  CHECK(rule_support(stats_of(0, 0, 0, 0, 0), model) == doctest::Approx(0.6).epsilon(1e-15));

  for (auto& col : model.table.counts) col.assign(2, {});
  CHECK(rule_support(stats_of(0, 0, 0, 0, 0), model) == 0.5);
  StatVector degenerate;
  degenerate.degenerate = true;
  CHECK(rule_support(degenerate, model) == 0.5);
}

TEST_CASE("rule_probabilistic uses full-conjunction counts") {
  std::vector<LabelledStats> train = {
      {stats_of(0, 0, 0, 0, 0), Label::machine}, {stats_of(0, 0, 0, 0, 0), Label::machine},
      {stats_of(0, 0, 0, 0, 0), Label::human},   {stats_of(1, 1, 1, 1, 1), Label::human},
  };
  const RuleModel model = fit_rule_model(train, 2, 20);
  CHECK(model.conjunctions.at("1-1-1-1-1").n == 3);
  CHECK(rule_probabilistic(stats_of(0, 0, 0, 0, 0), model) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rule_probabilistic(stats_of(1, 1, 1, 1, 1), model) == 0.0);
  CHECK(rule_probabilistic(stats_of(0, 1, 0, 0, 0), model) == 0.5);
}

TEST_CASE("unique training conjunctions give neutral scores elsewhere") {
  std::vector<LabelledStats> train;
  for (int i = 0; i < 5; ++i) {
    const double v = i;
    train.push_back({stats_of(v, v, v, v, v), i % 2 ? Label::machine : Label::human});
  }
  const RuleModel model = fit_rule_model(train, 5, 20);
  CHECK(model.conjunctions.size() == 5);
  for (const auto& [key, count] : model.conjunctions) CHECK(count.n == 1);
  CHECK(rule_probabilistic(stats_of(3, 3, 3, 3, 3), model) == 1.0);
  CHECK(rule_probabilistic(stats_of(3, 0, 3, 3, 3), model) == 0.5);
}

TEST_CASE("rule scores stay in the unit interval") {
  std::mt19937_64 rng(5);
  const auto train = random_training(rng, 60);
  const RuleModel model = fit_rule_model(train, 10, 20);
  std::uniform_real_distribution<double> u(-1.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    const StatVector s = stats_of(u(rng), u(rng), u(rng), u(rng), u(rng));
    const double r = rule_support(s, model);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    const double p = rule_probabilistic(s, model);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("fit_rule_model from a corpus") {
  SynthSpec spec;
  spec.n_machine = 60;
  spec.n_human = 60;
  const Corpus c = synth_corpus(spec);
  const auto method = DetectorMethod::of(DetectorKind::likelihood);
  const RuleModel model = fit_rule_model(c, method, 10, 20);
  std::int64_t total = 0;
  for (const auto& count : model.table.counts[0]) total += count.n;
  CHECK(total == 120);
  const SupportTable again = fit_atom_support(c, method, model.grid, 20);
  for (int m = 0; m < kNumStatistics; ++m) CHECK(again.counts[m] == model.table.counts[m]);
}

TEST_CASE("rule model JSON round trip") {
  std::mt19937_64 rng(8);
  const RuleModel model = fit_rule_model(random_training(rng, 40), 7, 13);
  const RuleModel back = rule_model_from_json(nlohmann::json::parse(to_json(model).dump()));
  CHECK(back.t0 == 13);
  CHECK(back.grid.K == 7);
  for (int m = 0; m < kNumStatistics; ++m) {
    CHECK(back.grid.stats[m].thresholds == model.grid.stats[m].thresholds);
    CHECK(back.grid.stats[m].collapsed == model.grid.stats[m].collapsed);
    CHECK(back.table.counts[m] == model.table.counts[m]);
  }
  CHECK(back.conjunctions == model.conjunctions);

  nlohmann::json broken = to_json(model);
  broken["version"] = 99;
  CHECK_THROWS_AS(rule_model_from_json(broken), ValidationError);
  CHECK_THROWS_AS(rule_model_from_json(nlohmann::json::object()), ValidationError);
}
