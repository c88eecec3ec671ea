#include "mgt/base_detectors.hpp"

#include <algorithm>
#include <cmath>

namespace mgt {

namespace {

struct MethodRow {
  DetectorKind kind;
  const char* name;
  DetectorMethod::Family family;
  std::string candidate;
  std::vector<std::string> streams;
  std::vector<std::string> aux;
};

const std::vector<MethodRow>& method_table() {
  using F = DetectorMethod::Family;
  static const std::vector<MethodRow> rows{
      {DetectorKind::likelihood, "likelihood", F::mean, "logprob", {"logprob"}, {}},
      {DetectorKind::logrank, "logrank", F::mean, "logrank", {"logrank"}, {}},
      {DetectorKind::entropy, "entropy", F::mean, "entropy", {"entropy"}, {}},
      {DetectorKind::binoculars, "binoculars", F::ratio, "entropy_p", {"entropy_p", "xent_pq"}, {}},
      {DetectorKind::detectgpt, "detectgpt", F::zscore, "logprob", {"logprob"}, {"perturbed"}},
      {DetectorKind::fastdetectgpt, "fastdetectgpt", F::zscore, "logprob", {"logprob"},
       {"regenerated"}},
      {DetectorKind::dna_detectllm, "dna_detectllm", F::dna, "logprob",
       {"logprob", "ideal_logprob", "logprob_q"}, {}},
  };
  return rows;
}

const MethodRow& row_of(DetectorKind kind) {
  for (const auto& row : method_table())
    if (row.kind == kind) return row;
  throw ConfigError("unknown detector kind");
}

// Streams stored in the opposite orientation ("larger = human").
bool stored_human_oriented(DetectorKind kind) {
  return kind == DetectorKind::logrank || kind == DetectorKind::entropy ||
         kind == DetectorKind::binoculars;
}

}  // namespace

DetectorMethod DetectorMethod::of(DetectorKind kind) {
  const auto& row = row_of(kind);
  return DetectorMethod{kind, row.streams, row.aux};
}

DetectorMethod DetectorMethod::by_name(std::string_view name) {
  for (const auto& row : method_table())
    if (name == row.name) return of(row.kind);
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string DetectorMethod::name() const { return row_of(kind).name; }

DetectorMethod::Family DetectorMethod::family() const { return row_of(kind).family; }

const std::string& DetectorMethod::candidate_stream() const { return row_of(kind).candidate; }

const std::vector<std::string>& detector_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& row : method_table()) out.emplace_back(row.name);
    return out;
  }();
  return names;
}

void require_capabilities(const TokenScoreRecord& record, const DetectorMethod& method) {
  for (const auto& s : method.required_streams)
    if (!record.has_stream(s)) throw CapabilityError("stream " + s);
  for (const auto& a : method.required_aux)
    if (!record.has_aux(a)) throw CapabilityError("aux_means " + a);
}

Eigen::VectorXd token_scores(const TokenScoreRecord& record, const DetectorMethod& method) {
  const auto& raw = record.stream(method.candidate_stream());
  if (stored_human_oriented(method.kind)) return -raw;
  return raw;
}

double aggregate_binoculars(const Eigen::Ref<const Eigen::VectorXd>& entropy_p,
                            const Eigen::Ref<const Eigen::VectorXd>& xent_pq) {
  if (entropy_p.size() != xent_pq.size())
    throw LengthError("aggregate_binoculars: stream lengths differ");
  const double numerator = -aggregate_mean(entropy_p);
  const double denominator = -aggregate_mean(xent_pq);
  if (denominator == 0.0) throw DegenerateScoreError("aggregate_binoculars: zero denominator");
  // Low perplexity relative to cross-perplexity indicates machine text.
  return sign_normalize(numerator / denominator);
}

double aggregate_zscore(double candidate_mean, const Eigen::Ref<const Eigen::VectorXd>& aux_means) {
  if (aux_means.size() < 2) throw LengthError("aggregate_zscore needs at least 2 aux means");
  const double mu = aux_means.mean();
  const double sd = std::sqrt((aux_means.array() - mu).square().mean());
  if (sd == 0.0) throw DegenerateScoreError("aggregate_zscore: zero standard deviation");
  return (candidate_mean - mu) / sd;
}

double aggregate_dna(const Eigen::Ref<const Eigen::VectorXd>& logprob,
                     const Eigen::Ref<const Eigen::VectorXd>& ideal_logprob,
                     const Eigen::Ref<const Eigen::VectorXd>& logprob_q_weighted) {
  const auto n = logprob.size();
  if (n < 1) throw LengthError("aggregate_dna needs at least 1 token");
  if (ideal_logprob.size() != n || logprob_q_weighted.size() != n)
    throw LengthError("aggregate_dna: stream lengths differ");
  const double numerator = (-ideal_logprob).mean() - (-logprob).mean();
  const double denominator = 2.0 * logprob_q_weighted.mean();
  if (denominator == 0.0) throw DegenerateScoreError("aggregate_dna: zero denominator");
  // A smaller repair cost indicates machine text.
  return sign_normalize(numerator / denominator);
}

std::string zscore_aux_name(DetectorKind kind) {
  const auto& aux = row_of(kind).aux;
  if (aux.empty()) throw ConfigError("method has no aux series");
  return aux.front();
}

double aggregate_with_candidate(const TokenScoreRecord& record, const DetectorMethod& method,
                                const Eigen::Ref<const Eigen::VectorXd>& candidate) {
  switch (method.family()) {
    case DetectorMethod::Family::mean:
      return aggregate_mean(candidate);
    case DetectorMethod::Family::zscore:
      return aggregate_zscore(aggregate_mean(candidate), record.aux(zscore_aux_name(method.kind)));
    case DetectorMethod::Family::ratio:
      // The candidate is the sign-normalized numerator stream (-entropy_p).
      return aggregate_binoculars(-candidate, record.stream("xent_pq"));
    case DetectorMethod::Family::dna:
      return aggregate_dna(candidate, record.stream("ideal_logprob"), record.stream("logprob_q"));
  }
  throw ConfigError("unhandled detector family");
}

DetectorOutput detect_base(const TokenScoreRecord& record, const DetectorMethod& method) {
  require_capabilities(record, method);
  return DetectorOutput{aggregate_with_candidate(record, method, token_scores(record, method))};
}

}  // namespace mgt
