#include "mgt/local_calibration.hpp"

namespace mgt {

void validate(const CalibrationParams& params) {
  if (!(params.W.array() >= 0.0).all() || !params.W.allFinite())
    throw ConfigError("calibration weights must be finite and >= 0");
  if (params.iters < 1) throw ConfigError("calibration iteration count must be >= 1");
}

Eigen::VectorXd calibrated_scores(const TokenScoreRecord& record, const DetectorMethod& method,
                                  const CalibrationParams& params) {
  require_capabilities(record, method);
  const Eigen::VectorXd p = normalize_scores(token_scores(record, method));
  return final_calibration(mean_field_calibrate(p, params), params.t0);
}

double enhance(const TokenScoreRecord& record, const DetectorMethod& method,
               const CalibrationParams& params) {
  if (record.length() < 2) throw LengthError("record '" + record.id + "' needs at least 2 tokens");
  return aggregate_with_candidate(record, method, calibrated_scores(record, method, params));
}

}  // namespace mgt
