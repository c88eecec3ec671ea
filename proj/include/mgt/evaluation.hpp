#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mgt/global_rules.hpp"
#include "mgt/joint_inference.hpp"
#include "mgt/metrics.hpp"
#include "mgt/score_model.hpp"

namespace mgt {

// Fixed 10 / 45 / 45 partition.
struct SplitSpec {
  std::uint64_t seed = 1;
};

inline const std::vector<std::uint64_t> kDefaultSeeds{1, 2, 3, 4, 5};

struct Split {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Seeded label-stratified shuffle. train = floor(n / 10); the remainder is
// halved with the odd record going to test.
Split split(const Corpus& corpus, const SplitSpec& spec);

struct MetricRow {
  std::uint64_t seed = 0;
  std::string group;
  double auroc = 0.0;
  double tpr_at_fpr = 0.0;
};

struct GroupSummary {
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
  double tpr_mean = 0.0;
  double tpr_std = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;  // sorted by (seed, group)
  std::map<std::string, GroupSummary> summary;

  // Fills `summary` from `rows` (population standard deviation).
  void summarize();
  // seed,group,auroc,tpr_at_fpr plus mean/std rows per group.
  void write_csv(std::ostream& out) const;
  void write_jsonl(std::ostream& out) const;
};

inline const std::string kAllGroup = "all";

struct ExperimentConfig {
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  // Machine source used for training/validation; empty means all sources.
  std::string train_source;
  double fpr_budget = 0.01;
  unsigned threads = 1;
};

struct ExperimentResult {
  MetricReport enhanced;
  MetricReport base;
  std::vector<FittedPipeline> pipelines;  // one per seed
};

// For every seed: split, fit on train/val, score the test split. Test groups
// are "all" plus one per machine source model (that source vs all human).
ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& config);

// Mean absolute k-hop score difference averaged over records.
double khop_mad(const Corpus& corpus, int k, const std::string& stream);

// Entry t-1 is the corpus mean of |d(t+1) - d(t)| for 1-based t, over the
// minimum common record length.
Eigen::VectorXd positionwise_mad(const Corpus& corpus, const std::string& stream);

struct StatRow {
  std::string id;
  Label label = Label::human;
  StatVector stats;
};

std::vector<StatRow> stat_distributions(const Corpus& corpus, int t0, const std::string& stream);
void write_stat_csv(const std::vector<StatRow>& rows, std::ostream& out);

}  // namespace mgt
