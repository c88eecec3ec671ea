#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgt/base_detectors.hpp"
#include "mgt/errors.hpp"
#include "mgt/score_model.hpp"

namespace mgt {

// Latter-part statistics, in this fixed order:
//   0  variance of scores
//   1  variance of adjacent absolute differences
//   2  mean of adjacent absolute differences
//   3  variance of long-range absolute differences (hop k = floor((N - t0) / 2))
//   4  mean of long-range absolute differences
inline constexpr int kNumStatistics = 5;
const std::array<std::string, kNumStatistics>& statistic_names();

struct StatVector {
  Eigen::Matrix<double, kNumStatistics, 1> z = Eigen::Matrix<double, kNumStatistics, 1>::Zero();
  bool degenerate = false;
  int hop = 0;  // long-range hop k; 0 when degenerate
};

// Minimum latter-part length below which statistics are flagged degenerate.
inline constexpr Eigen::Index kMinLatterLength = 4;

template <typename Derived>
double population_variance(const Eigen::MatrixBase<Derived>& x) {
  const double mu = x.mean();
  return (x.array() - mu).square().mean();
}

/// Statistics over positions t > t0 (1-based).
template <typename Derived>
StatVector global_statistics(const Eigen::MatrixBase<Derived>& scores, long long t0) {
  StatVector out;
  const Eigen::Index n = scores.size();
  const Eigen::Index start = std::clamp<long long>(t0, 0, n);
  const Eigen::Index len = n - start;
  if (len < kMinLatterLength) {
    out.degenerate = true;
    return out;
  }
  const Eigen::VectorXd late = scores.tail(len).template cast<double>();
  const Eigen::VectorXd adj = (late.tail(len - 1) - late.head(len - 1)).cwiseAbs();
  const Eigen::Index k = len / 2;
  const Eigen::VectorXd far = (late.tail(len - k) - late.head(len - k)).cwiseAbs();
  out.z << population_variance(late), population_variance(adj), adj.mean(),
      population_variance(far), far.mean();
  out.hop = static_cast<int>(k);
  return out;
}

// Thresholds of one statistic: tau_j = a + (j - 1) / (K - 1) * (b - a),
// j = 1..K-1, over the training range [a, b].
struct StatisticGrid {
  double a = 0.0;
  double b = 0.0;
  bool collapsed = false;  // a == b: every value maps to the last atom
  std::vector<double> thresholds;

  int buckets() const { return static_cast<int>(thresholds.size()) + 1; }
};

struct ThresholdGrid {
  int K = 10;
  std::array<StatisticGrid, kNumStatistics> stats;
};

ThresholdGrid fit_thresholds(const std::vector<StatVector>& train_stats, int K);

/// 1-based bucket: 1 + #{j : tau_j < z}. Boundaries fall into the lower bucket.
int assign_atom(double z, const StatisticGrid& grid);

struct AtomId {
  int statistic = 0;  // 0-based
  int bucket = 1;     // 1..K
  friend auto operator<=>(const AtomId&, const AtomId&) = default;
};

struct Rule {
  std::vector<AtomId> atoms;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct AtomCount {
  std::int64_t n = 0;
  std::int64_t machine = 0;
  double support() const { return n > 0 ? double(machine) / double(n) : 0.5; }
  friend bool operator==(const AtomCount&, const AtomCount&) = default;
};

struct SupportTable {
  // counts[m][bucket - 1]
  std::array<std::vector<AtomCount>, kNumStatistics> counts;
  const AtomCount& at(const AtomId& atom) const { return counts[atom.statistic][atom.bucket - 1]; }
  double support(const AtomId& atom) const { return at(atom).support(); }
};

struct LabelledStats {
  StatVector stats;
  Label label = Label::human;
};

SupportTable fit_atom_support(const std::vector<LabelledStats>& train, const ThresholdGrid& grid);
SupportTable fit_atom_support(const Corpus& train, const DetectorMethod& method,
                              const ThresholdGrid& grid, int t0);

Rule generate_rule(const StatVector& stats, const ThresholdGrid& grid);
int rule_prior(const Rule& rule, const ThresholdGrid& grid);

// Key of a full conjunction, e.g. "3-1-10-2-2".
std::string conjunction_key(const Rule& rule);

struct RuleModel {
  int t0 = 20;
  ThresholdGrid grid;
  SupportTable table;
  // Full-conjunction counts keyed by conjunction_key.
  std::map<std::string, AtomCount> conjunctions;
};

RuleModel fit_rule_model(const std::vector<LabelledStats>& train, int K, int t0);
RuleModel fit_rule_model(const Corpus& train, const DetectorMethod& method, int K, int t0);

/// Mean machine support of the activated atoms; 0.5 for degenerate stats.
double rule_support(const StatVector& stats, const RuleModel& model);
/// n_{alpha,machine} / n_alpha for the full conjunction; 0.5 when unseen.
double rule_probabilistic(const StatVector& stats, const RuleModel& model);

nlohmann::json to_json(const RuleModel& model);
RuleModel rule_model_from_json(const nlohmann::json& doc);

}  // namespace mgt
