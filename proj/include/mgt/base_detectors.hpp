#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

#include "mgt/errors.hpp"
#include "mgt/score_model.hpp"

namespace mgt {

// The unified metric-based detector family. Every score is sign-normalized so
// that larger means more machine-like.
enum class DetectorKind {
  likelihood,
  logrank,
  entropy,
  binoculars,
  detectgpt,
  fastdetectgpt,
  dna_detectllm,
};

struct DetectorMethod {
  DetectorKind kind = DetectorKind::likelihood;
  std::vector<std::string> required_streams;
  std::vector<std::string> required_aux;

  static DetectorMethod of(DetectorKind kind);
  static DetectorMethod by_name(std::string_view name);
  std::string name() const;

  // Which aggregation the method's decision stage uses.
  enum class Family { mean, ratio, zscore, dna };
  Family family() const;
  // Name of the per-token stream returned by token_scores.
  const std::string& candidate_stream() const;
};

const std::vector<std::string>& detector_names();

struct DetectorOutput {
  double score = 0.0;
};

// Flips orientation; applying it twice is the identity.
inline double sign_normalize(double raw) { return -raw; }

/// Throws CapabilityError naming the first missing stream or aux series.
void require_capabilities(const TokenScoreRecord& record, const DetectorMethod& method);

Eigen::VectorXd token_scores(const TokenScoreRecord& record, const DetectorMethod& method);

/// Mean over positions 2..N; the first token never contributes.
template <typename Derived>
typename Derived::Scalar aggregate_mean(const Eigen::MatrixBase<Derived>& scores) {
  if (scores.size() < 2) throw LengthError("aggregate_mean needs at least 2 tokens");
  return scores.tail(scores.size() - 1).mean();
}

double aggregate_binoculars(const Eigen::Ref<const Eigen::VectorXd>& entropy_p,
                            const Eigen::Ref<const Eigen::VectorXd>& xent_pq);
double aggregate_zscore(double candidate_mean, const Eigen::Ref<const Eigen::VectorXd>& aux_means);
double aggregate_dna(const Eigen::Ref<const Eigen::VectorXd>& logprob,
                     const Eigen::Ref<const Eigen::VectorXd>& ideal_logprob,
                     const Eigen::Ref<const Eigen::VectorXd>& logprob_q_weighted);

// Name of the aux series a z-score method standardizes against.
std::string zscore_aux_name(DetectorKind kind);

/// Decision stage with the candidate per-token stream replaced by `candidate`.
/// Auxiliary streams and aux_means are taken from the record untouched.
double aggregate_with_candidate(const TokenScoreRecord& record, const DetectorMethod& method,
                                const Eigen::Ref<const Eigen::VectorXd>& candidate);

DetectorOutput detect_base(const TokenScoreRecord& record, const DetectorMethod& method);

}  // namespace mgt
