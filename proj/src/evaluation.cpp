#include "mgt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mgt {

Split split(const Corpus& corpus, const SplitSpec& spec) {
  std::vector<std::size_t> human, machine;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (corpus.records[i].label == Label::machine ? machine : human).push_back(i);
  if (human.empty() || machine.empty()) throw ValidationError("split: corpus must contain both labels");
  if (corpus.size() < 10) throw ValidationError("split: corpus needs at least 10 records");

  std::mt19937_64 rng(spec.seed);
  std::shuffle(human.begin(), human.end(), rng);
  std::shuffle(machine.begin(), machine.end(), rng);

  // Interleave the two shuffled lists by relative rank so every prefix holds
  // each label in proportion.
  struct Slot {
    double key;
    int label;
    std::size_t index;
  };
  std::vector<Slot> order;
  order.reserve(corpus.size());
  for (std::size_t r = 0; r < human.size(); ++r)
    order.push_back({(double(r) + 0.5) / double(human.size()), 0, human[r]});
  for (std::size_t r = 0; r < machine.size(); ++r)
    order.push_back({(double(r) + 0.5) / double(machine.size()), 1, machine[r]});
  std::sort(order.begin(), order.end(), [](const Slot& a, const Slot& b) {
    return a.key != b.key ? a.key < b.key : a.label < b.label;
  });

  const std::size_t n = corpus.size();
  const std::size_t n_train = n / 10;
  const std::size_t n_val = (n - n_train) / 2;
  Split out;
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& dest = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
    dest.records.push_back(corpus.records[order[i].index]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

void MetricReport::summarize() {
  std::map<std::string, std::vector<const MetricRow*>> by_group;
  for (const auto& row : rows) by_group[row.group].push_back(&row);
  summary.clear();
  for (const auto& [group, members] : by_group) {
    const double n = double(members.size());
    GroupSummary s;
    for (const auto* r : members) {
      s.auroc_mean += r->auroc / n;
      s.tpr_mean += r->tpr_at_fpr / n;
    }
    double va = 0.0, vt = 0.0;
    for (const auto* r : members) {
      va += (r->auroc - s.auroc_mean) * (r->auroc - s.auroc_mean) / n;
      vt += (r->tpr_at_fpr - s.tpr_mean) * (r->tpr_at_fpr - s.tpr_mean) / n;
    }
    s.auroc_std = std::sqrt(va);
    s.tpr_std = std::sqrt(vt);
    summary[group] = s;
  }
}

void MetricReport::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(10);
  out << "seed,group,auroc,tpr_at_fpr\n";
  for (const auto& r : rows) out << r.seed << ',' << r.group << ',' << r.auroc << ',' << r.tpr_at_fpr << '\n';
  for (const auto& [group, s] : summary) {
    out << "mean," << group << ',' << s.auroc_mean << ',' << s.tpr_mean << '\n';
    out << "std," << group << ',' << s.auroc_std << ',' << s.tpr_std << '\n';
  }
  out.precision(old_precision);
}

void MetricReport::write_jsonl(std::ostream& out) const {
  for (const auto& r : rows)
    out << nlohmann::json{{"seed", r.seed}, {"group", r.group}, {"auroc", r.auroc},
                          {"tpr_at_fpr", r.tpr_at_fpr}}
               .dump()
        << '\n';
  for (const auto& [group, s] : summary)
    out << nlohmann::json{{"summary", group},
                          {"auroc_mean", s.auroc_mean},
                          {"auroc_std", s.auroc_std},
                          {"tpr_mean", s.tpr_mean},
                          {"tpr_std", s.tpr_std}}
               .dump()
        << '\n';
}

namespace {

Corpus restrict_to_source(const Corpus& corpus, const std::string& source) {
  if (source.empty()) return corpus;
  Corpus out;
  for (const auto& rec : corpus.records)
    if (rec.label == Label::human || rec.source_model == source) out.records.push_back(rec);
  return out;
}

void add_group_rows(std::uint64_t seed, const Corpus& test, const std::vector<double>& scores,
                    double fpr_budget, MetricReport& report) {
  std::set<std::string> sources;
  for (const auto& rec : test.records)
    if (rec.label == Label::machine) sources.insert(rec.source_model);

  auto emit = [&](const std::string& group, auto&& keep) {
    std::vector<double> s;
    std::vector<Label> l;
    for (std::size_t i = 0; i < test.size(); ++i)
      if (keep(test.records[i])) {
        s.push_back(scores[i]);
        l.push_back(test.records[i].label);
      }
    report.rows.push_back({seed, group, auroc(s, l), tpr_at_fpr(s, l, fpr_budget)});
  };
  emit(kAllGroup, [](const TokenScoreRecord&) { return true; });
  for (const auto& src : sources)
    emit(src, [&](const TokenScoreRecord& r) { return r.label == Label::human || r.source_model == src; });
}

}  // namespace

ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& config) {
  validate(config.pipeline);
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  if (!config.train_source.empty()) {
    const bool present = std::any_of(corpus.records.begin(), corpus.records.end(), [&](const auto& r) {
      return r.label == Label::machine && r.source_model == config.train_source;
    });
    if (!present) throw ConfigError("training source '" + config.train_source + "' not in corpus");
  }

  ExperimentResult result;
  for (std::uint64_t seed : config.seeds) {
    const Split parts = split(corpus, SplitSpec{seed});
    const auto pipeline = fit(restrict_to_source(parts.train, config.train_source),
                              restrict_to_source(parts.val, config.train_source), config.pipeline);

    std::vector<double> enhanced(parts.test.size()), base(parts.test.size());
    const auto batch = detect_batch(parts.test, pipeline, config.threads);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!batch[i].scores) throw ValidationError("record '" + batch[i].id + "': " + batch[i].error);
      enhanced[i] = batch[i].scores->F;
      base[i] = detect_base(parts.test.records[i], config.pipeline.method).score;
    }
    add_group_rows(seed, parts.test, enhanced, config.fpr_budget, result.enhanced);
    add_group_rows(seed, parts.test, base, config.fpr_budget, result.base);
    result.pipelines.push_back(pipeline);
  }
  for (MetricReport* r : {&result.enhanced, &result.base}) {
    std::stable_sort(r->rows.begin(), r->rows.end(), [](const MetricRow& a, const MetricRow& b) {
      return a.seed != b.seed ? a.seed < b.seed : a.group < b.group;
    });
    r->summarize();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Relation analysis

double khop_mad(const Corpus& corpus, int k, const std::string& stream) {
  if (k < 1) throw ValidationError("khop_mad: k must be >= 1");
  if (corpus.empty()) throw MetricError("khop_mad: empty corpus");
  double total = 0.0;
  for (const auto& rec : corpus.records) {
    const auto& d = rec.stream(stream);
    const Eigen::Index n = d.size();
    if (n <= k)
      throw LengthError("khop_mad: record '" + rec.id + "' has " + std::to_string(n) +
                        " tokens, needs more than " + std::to_string(k));
    total += (d.tail(n - k) - d.head(n - k)).cwiseAbs().mean();
  }
  return total / double(corpus.size());
}

Eigen::VectorXd positionwise_mad(const Corpus& corpus, const std::string& stream) {
  if (corpus.empty()) throw MetricError("positionwise_mad: empty corpus");
  Eigen::Index common = std::numeric_limits<Eigen::Index>::max();
  for (const auto& rec : corpus.records) common = std::min(common, rec.stream(stream).size());
  if (common < 2) throw LengthError("positionwise_mad: records need at least 2 tokens");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(common - 1);
  for (const auto& rec : corpus.records) {
    const auto d = rec.stream(stream).head(common);
    acc += (d.tail(common - 1) - d.head(common - 1)).cwiseAbs();
  }
  return acc / double(corpus.size());
}

std::vector<StatRow> stat_distributions(const Corpus& corpus, int t0, const std::string& stream) {
  std::vector<StatRow> rows;
  rows.reserve(corpus.size());
  for (const auto& rec : corpus.records)
    rows.push_back({rec.id, rec.label, global_statistics(rec.stream(stream), t0)});
  return rows;
}

void write_stat_csv(const std::vector<StatRow>& rows, std::ostream& out) {
  const auto old_precision = out.precision(10);
  out << "id,label";
  for (const auto& name : statistic_names()) out << ',' << name;
  out << ",degenerate\n";
  for (const auto& r : rows) {
    out << r.id << ',' << to_string(r.label);
    for (int m = 0; m < kNumStatistics; ++m) out << ',' << r.stats.z[m];
    out << ',' << (r.stats.degenerate ? "true" : "false") << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mgt
