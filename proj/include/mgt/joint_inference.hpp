#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgt/base_detectors.hpp"
#include "mgt/global_rules.hpp"
#include "mgt/local_calibration.hpp"
#include "mgt/score_model.hpp"

namespace mgt {

enum class RuleMode {
  support,        // mean atom support
  probabilistic,  // full-conjunction frequency
};

struct PipelineConfig {
  DetectorMethod method = DetectorMethod::of(DetectorKind::likelihood);
  int mrf_t0 = 20;
  int mrf_iters = 10;
  int rules_k = 10;
  int rules_t0 = 20;
  std::vector<double> w_grid{0.1, 0.5, 1.0, 2.0};
  std::vector<double> lambda_grid{0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0};
  // When set, the corresponding grid collapses to this single value.
  std::optional<double> fixed_w;
  std::optional<double> fixed_lambda;
  RuleMode rule_mode = RuleMode::support;
  // Compute global statistics on calibrated rather than raw token scores.
  bool stats_on_calibrated = false;
};

void validate(const PipelineConfig& config);

struct EnhNorm {
  double min = 0.0;
  double max = 0.0;

  // Min-max map into [0, 1], clamped outside the training range.
  double operator()(double x) const;
};

struct FittedPipeline {
  DetectorMethod method = DetectorMethod::of(DetectorKind::likelihood);
  CalibrationParams calib;
  RuleModel rules;
  double lambda = 0.0;
  EnhNorm enh_norm;
  RuleMode rule_mode = RuleMode::support;
  bool stats_on_calibrated = false;
  // Validation AUROC of the selected grid cell.
  double val_auroc = 0.0;
};

FittedPipeline fit(const Corpus& train, const Corpus& val, const PipelineConfig& config);

struct ScoreBreakdown {
  double F = 0.0;
  double f_enh = 0.0;  // raw, before enh_norm
  double r_rule = 0.0;
};

ScoreBreakdown score(const TokenScoreRecord& record, const FittedPipeline& pipeline);
double detect(const TokenScoreRecord& record, const FittedPipeline& pipeline);

struct BatchEntry {
  std::string id;
  std::optional<ScoreBreakdown> scores;
  std::string error;  // set iff scores is empty
};

// Per-record failures are reported in the entry, never thrown. Output order
// matches input order regardless of `threads`.
std::vector<BatchEntry> detect_batch(const Corpus& corpus, const FittedPipeline& pipeline,
                                     unsigned threads = 1);

nlohmann::json to_json(const FittedPipeline& pipeline);
FittedPipeline pipeline_from_json(const nlohmann::json& doc);
void save_pipeline(const FittedPipeline& pipeline, const std::string& path);
FittedPipeline load_pipeline(const std::string& path);

}  // namespace mgt
