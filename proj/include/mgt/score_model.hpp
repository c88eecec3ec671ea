#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgt/errors.hpp"

namespace mgt {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Label { human, machine };

std::string_view to_string(Label label);
Label parse_label(std::string_view name);

// Closed set of per-token stream names accepted by the parser.
//   logprob        log p(s_t | s_<t) under the observer
//   logrank        log of the 1-based rank of s_t
//   entropy        Shannon entropy of the observer's next-token distribution
//   entropy_p      observer entropy, numerator of the Binoculars ratio
//   xent_pq        observer/performer cross term, denominator of the ratio
//   logprob_q      p(s_t|s_<t) * log q(s_t|s_<t), DNA-DetectLLM denominator
//   ideal_logprob  log p of the repaired ("ideal") token at position t
//   calibrated     calibrated per-token scores written by `detect`
const std::vector<std::string>& registered_streams();
bool is_registered_stream(std::string_view name);

struct TokenScoreRecord {
  std::string id;
  Label label = Label::human;
  std::string source_model;
  std::string domain;
  std::map<std::string, Eigen::VectorXd> streams;
  std::map<std::string, Eigen::VectorXd> aux_means;

  // Common stream length; 0 when the record carries no streams.
  Eigen::Index length() const;
  bool has_stream(const std::string& name) const { return streams.count(name) != 0; }
  bool has_aux(const std::string& name) const { return aux_means.count(name) != 0; }
  const Eigen::VectorXd& stream(const std::string& name) const;
  const Eigen::VectorXd& aux(const std::string& name) const;

  friend bool operator==(const TokenScoreRecord&, const TokenScoreRecord&) = default;
};

struct Corpus {
  std::vector<TokenScoreRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Throws ValidationError if the record breaks a TokenScoreRecord invariant.
void validate(const TokenScoreRecord& record);

// One JSON object per line; blank lines are skipped. Line numbers in errors
// are 1-based.
Corpus parse_corpus(std::istream& in);
Corpus parse_corpus(std::string_view text);
TokenScoreRecord parse_record(std::string_view line, std::size_t line_number = 1);

std::string serialize_record(const TokenScoreRecord& record);
void serialize_corpus(const Corpus& corpus, std::ostream& out);
std::string serialize_corpus(const Corpus& corpus);

Corpus read_corpus_file(const std::string& path);
void write_corpus_file(const Corpus& corpus, const std::string& path);

/// Per-sequence min-max normalization to [0, 1]. A constant sequence maps to
/// 0.5 everywhere.
template <typename Derived>
Vector<typename Derived::Scalar> normalize_scores(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  if (scores.size() == 0) throw ValidationError("normalize_scores: empty sequence");
  if (!scores.allFinite()) throw ValidationError("normalize_scores: non-finite score");
  const Scalar lo = scores.minCoeff();
  const Scalar hi = scores.maxCoeff();
  if (!(hi > lo)) return Vector<Scalar>::Constant(scores.size(), Scalar(0.5));
  return ((scores.array() - lo) / (hi - lo)).matrix();
}

struct ClassParams {
  double ar_coefficient = 0.0;
  double late_noise_sd = 1.0;
  double initial_noise_sd = 0.0;
  double drift_sd = 0.0;
  // Per-sequence baseline level ~ N(level_mean, level_sd).
  double level_mean = 0.0;
  double level_sd = 0.0;
};

// Synthetic logprob-stream generator. Each sequence is an order-1
// autoregressive process around a (possibly drifting) level, with extra
// independent noise on positions 1..t0.
struct SynthSpec {
  int n_machine = 400;
  int n_human = 400;
  std::pair<int, int> length_range{64, 256};
  ClassParams machine_params{0.9, 0.3, 1.5, 0.0, -2.2, 0.45};
  ClassParams human_params{0.9, 0.35, 1.5, 0.02, -2.6, 0.45};
  int t0 = 20;
  std::uint64_t seed = 1;

  // Both classes drawn from human_params: the null-signal control family.
  static SynthSpec control();
};

void validate(const SynthSpec& spec);
Corpus synth_corpus(const SynthSpec& spec);

}  // namespace mgt
