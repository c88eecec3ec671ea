#include "mgt/global_rules.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace mgt {

using nlohmann::json;

const std::array<std::string, kNumStatistics>& statistic_names() {
  static const std::array<std::string, kNumStatistics> names{
      "var_late", "var_late_adj", "mean_late_adj", "var_late_long", "mean_late_long"};
  return names;
}

ThresholdGrid fit_thresholds(const std::vector<StatVector>& train_stats, int K) {
  if (K < 2) throw FitError("bucket count K must be >= 2");
  std::vector<const StatVector*> usable;
  for (const auto& s : train_stats)
    if (!s.degenerate) usable.push_back(&s);
  if (usable.size() < 2)
    throw FitError("threshold fitting needs at least 2 non-degenerate training texts");

  ThresholdGrid grid;
  grid.K = K;
  for (int m = 0; m < kNumStatistics; ++m) {
    double a = std::numeric_limits<double>::infinity();
    double b = -std::numeric_limits<double>::infinity();
    for (const auto* s : usable) {
      a = std::min(a, s->z[m]);
      b = std::max(b, s->z[m]);
    }
    auto& g = grid.stats[m];
    g.a = a;
    g.b = b;
    g.collapsed = !(b > a);
    g.thresholds.resize(K - 1);
    for (int j = 1; j <= K - 1; ++j) g.thresholds[j - 1] = a + double(j - 1) / double(K - 1) * (b - a);
  }
  return grid;
}

int assign_atom(double z, const StatisticGrid& grid) {
  if (grid.collapsed) return grid.buckets();
  // thresholds are nondecreasing: count of tau_j < z is a lower_bound offset
  const auto below = std::lower_bound(grid.thresholds.begin(), grid.thresholds.end(), z);
  return 1 + static_cast<int>(below - grid.thresholds.begin());
}

Rule generate_rule(const StatVector& stats, const ThresholdGrid& grid) {
  if (stats.degenerate) throw ValidationError("generate_rule: degenerate statistics");
  Rule rule;
  rule.atoms.reserve(kNumStatistics);
  for (int m = 0; m < kNumStatistics; ++m) rule.atoms.push_back({m, assign_atom(stats.z[m], grid.stats[m])});
  return rule;
}

int rule_prior(const Rule& rule, const ThresholdGrid& grid) {
  if (rule.atoms.size() != kNumStatistics) return 0;
  std::set<int> covered;
  for (const auto& atom : rule.atoms) {
    if (atom.statistic < 0 || atom.statistic >= kNumStatistics) return 0;
    if (atom.bucket < 1 || atom.bucket > grid.stats[atom.statistic].buckets()) return 0;
    if (!covered.insert(atom.statistic).second) return 0;
  }
  return 1;
}

std::string conjunction_key(const Rule& rule) {
  std::string key;
  for (const auto& atom : rule.atoms) {
    if (!key.empty()) key += '-';
    key += std::to_string(atom.bucket);
  }
  return key;
}

SupportTable fit_atom_support(const std::vector<LabelledStats>& train, const ThresholdGrid& grid) {
  SupportTable table;
  for (int m = 0; m < kNumStatistics; ++m) table.counts[m].assign(grid.stats[m].buckets(), {});
  for (const auto& item : train) {
    if (item.stats.degenerate) continue;
    for (const auto& atom : generate_rule(item.stats, grid).atoms) {
      auto& c = table.counts[atom.statistic][atom.bucket - 1];
      ++c.n;
      if (item.label == Label::machine) ++c.machine;
    }
  }
  return table;
}

namespace {
std::vector<LabelledStats> labelled_statistics(const Corpus& corpus, const DetectorMethod& method,
                                               int t0) {
  std::vector<LabelledStats> items;
  items.reserve(corpus.size());
  for (const auto& rec : corpus.records)
    items.push_back({global_statistics(token_scores(rec, method), t0), rec.label});
  return items;
}
}  // namespace

SupportTable fit_atom_support(const Corpus& train, const DetectorMethod& method,
                              const ThresholdGrid& grid, int t0) {
  return fit_atom_support(labelled_statistics(train, method, t0), grid);
}

RuleModel fit_rule_model(const std::vector<LabelledStats>& train, int K, int t0) {
  std::vector<StatVector> stats;
  stats.reserve(train.size());
  for (const auto& item : train) stats.push_back(item.stats);

  RuleModel model;
  model.t0 = t0;
  model.grid = fit_thresholds(stats, K);
  model.table = fit_atom_support(train, model.grid);
  for (const auto& item : train) {
    if (item.stats.degenerate) continue;
    auto& c = model.conjunctions[conjunction_key(generate_rule(item.stats, model.grid))];
    ++c.n;
    if (item.label == Label::machine) ++c.machine;
  }
  return model;
}

RuleModel fit_rule_model(const Corpus& train, const DetectorMethod& method, int K, int t0) {
  return fit_rule_model(labelled_statistics(train, method, t0), K, t0);
}

double rule_support(const StatVector& stats, const RuleModel& model) {
  if (stats.degenerate) return 0.5;
  double sum = 0.0;
  for (const auto& atom : generate_rule(stats, model.grid).atoms) sum += model.table.support(atom);
  return sum / kNumStatistics;
}

double rule_probabilistic(const StatVector& stats, const RuleModel& model) {
  if (stats.degenerate) return 0.5;
  auto it = model.conjunctions.find(conjunction_key(generate_rule(stats, model.grid)));
  if (it == model.conjunctions.end()) return 0.5;
  return it->second.support();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr int kRuleFormatVersion = 1;
}

json to_json(const RuleModel& model) {
  json doc;
  doc["format"] = "mgt-rule-model";
  doc["version"] = kRuleFormatVersion;
  doc["K"] = model.grid.K;
  doc["M"] = kNumStatistics;
  doc["t0"] = model.t0;
  json stats = json::array();
  for (int m = 0; m < kNumStatistics; ++m) {
    const auto& g = model.grid.stats[m];
    json counts = json::array();
    json machine = json::array();
    json support = json::array();
    for (const auto& c : model.table.counts[m]) {
      counts.push_back(c.n);
      machine.push_back(c.machine);
      support.push_back(c.support());
    }
    stats.push_back({{"name", statistic_names()[m]},
                     {"a", g.a},
                     {"b", g.b},
                     {"collapsed", g.collapsed},
                     {"thresholds", g.thresholds},
                     {"atom_counts", counts},
                     {"atom_machine", machine},
                     {"atom_support", support}});
  }
  doc["statistics"] = std::move(stats);
  json conj = json::object();
  for (const auto& [key, c] : model.conjunctions) conj[key] = {c.n, c.machine};
  doc["conjunctions"] = std::move(conj);
  return doc;
}

RuleModel rule_model_from_json(const json& doc) {
  try {
    if (doc.at("version").get<int>() != kRuleFormatVersion)
      throw ValidationError("unsupported rule model version");
    if (doc.at("M").get<int>() != kNumStatistics)
      throw ValidationError("rule model statistic count mismatch");
    RuleModel model;
    model.grid.K = doc.at("K").get<int>();
    model.t0 = doc.at("t0").get<int>();
    const auto& stats = doc.at("statistics");
    if (!stats.is_array() || stats.size() != kNumStatistics)
      throw ValidationError("rule model needs one entry per statistic");
    for (int m = 0; m < kNumStatistics; ++m) {
      const auto& s = stats[m];
      auto& g = model.grid.stats[m];
      g.a = s.at("a").get<double>();
      g.b = s.at("b").get<double>();
      g.collapsed = s.at("collapsed").get<bool>();
      g.thresholds = s.at("thresholds").get<std::vector<double>>();
      if (g.buckets() != model.grid.K) throw ValidationError("threshold count does not match K");
      const auto n = s.at("atom_counts").get<std::vector<std::int64_t>>();
      const auto mach = s.at("atom_machine").get<std::vector<std::int64_t>>();
      if (n.size() != std::size_t(model.grid.K) || mach.size() != n.size())
        throw ValidationError("atom table size does not match K");
      for (std::size_t i = 0; i < n.size(); ++i) {
        if (mach[i] < 0 || mach[i] > n[i]) throw ValidationError("atom machine count exceeds total");
        model.table.counts[m].push_back({n[i], mach[i]});
      }
    }
    if (doc.contains("conjunctions"))
      for (const auto& [key, c] : doc.at("conjunctions").items())
        model.conjunctions[key] = {c.at(0).get<std::int64_t>(), c.at(1).get<std::int64_t>()};
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed rule model: ") + e.what());
  }
}

}  // namespace mgt
