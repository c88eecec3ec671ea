#include "mgt/score_model.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mgt {

using nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::machine ? "machine" : "human";
}

Label parse_label(std::string_view name) {
  if (name == "machine") return Label::machine;
  if (name == "human") return Label::human;
  throw ValidationError("unknown label '" + std::string(name) + "'");
}

const std::vector<std::string>& registered_streams() {
  static const std::vector<std::string> names{
      "logprob", "logrank", "entropy", "entropy_p", "xent_pq",
      "logprob_q", "ideal_logprob", "calibrated"};
  return names;
}

bool is_registered_stream(std::string_view name) {
  const auto& names = registered_streams();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Eigen::Index TokenScoreRecord::length() const {
  return streams.empty() ? 0 : streams.begin()->second.size();
}

const Eigen::VectorXd& TokenScoreRecord::stream(const std::string& name) const {
  auto it = streams.find(name);
  if (it == streams.end()) throw CapabilityError("stream " + name);
  return it->second;
}

const Eigen::VectorXd& TokenScoreRecord::aux(const std::string& name) const {
  auto it = aux_means.find(name);
  if (it == aux_means.end()) throw CapabilityError("aux_means " + name);
  return it->second;
}

void validate(const TokenScoreRecord& record) {
  const std::string who = "record '" + record.id + "': ";
  if (record.streams.empty()) throw ValidationError(who + "no streams");
  const Eigen::Index n = record.length();
  if (n < 1) throw ValidationError(who + "empty stream");
  for (const auto& [name, values] : record.streams) {
    if (!is_registered_stream(name)) throw ValidationError(who + "unknown stream '" + name + "'");
    if (values.size() != n)
      throw ValidationError(who + "stream length mismatch: '" + name + "' has " +
                            std::to_string(values.size()) + ", expected " + std::to_string(n));
    if (!values.allFinite()) throw ValidationError(who + "non-finite value in '" + name + "'");
  }
  for (const auto& [name, values] : record.aux_means) {
    if (values.size() < 2) throw ValidationError(who + "aux_means '" + name + "' needs >= 2 values");
    if (!values.allFinite()) throw ValidationError(who + "non-finite value in aux '" + name + "'");
  }
}

namespace {

Eigen::VectorXd to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(what + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

std::map<std::string, Eigen::VectorXd> to_series_map(const json& j, const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + " must be an object");
  std::map<std::string, Eigen::VectorXd> out;
  for (const auto& [name, values] : j.items()) out[name] = to_vector(values, what + "." + name);
  return out;
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

TokenScoreRecord record_from_json(const json& j) {
  static const std::set<std::string> known{"id", "label", "source_model", "domain", "streams",
                                           "aux_means"};
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ValidationError("unknown field '" + item.key() + "'");

  TokenScoreRecord rec;
  rec.id = required_string(j, "id");
  rec.label = parse_label(required_string(j, "label"));
  rec.source_model = required_string(j, "source_model");
  rec.domain = required_string(j, "domain");
  if (!j.contains("streams")) throw ValidationError("missing field 'streams'");
  rec.streams = to_series_map(j.at("streams"), "streams");
  if (j.contains("aux_means")) rec.aux_means = to_series_map(j.at("aux_means"), "aux_means");
  validate(rec);
  return rec;
}

}  // namespace

TokenScoreRecord parse_record(std::string_view line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
  }
  try {
    return record_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line_number) + ": " + e.what());
  }
}

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto rec = parse_record(line, line_number);
    if (!ids.insert(rec.id).second)
      throw ValidationError("line " + std::to_string(line_number) + ": duplicate id '" + rec.id + "'");
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

Corpus parse_corpus(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in);
}

std::string serialize_record(const TokenScoreRecord& record) {
  json j;
  j["id"] = record.id;
  j["label"] = std::string(to_string(record.label));
  j["source_model"] = record.source_model;
  j["domain"] = record.domain;
  json streams = json::object();
  for (const auto& [name, values] : record.streams) streams[name] = to_json(values);
  j["streams"] = std::move(streams);
  if (!record.aux_means.empty()) {
    json aux = json::object();
    for (const auto& [name, values] : record.aux_means) aux[name] = to_json(values);
    j["aux_means"] = std::move(aux);
  }
  return j.dump();
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& rec : corpus.records) out << serialize_record(rec) << '\n';
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  serialize_corpus(corpus, out);
  return out.str();
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file '" + path + "'");
  return parse_corpus(in);
}

void write_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  serialize_corpus(corpus, out);
}

// ---------------------------------------------------------------------------
// Synthetic corpora

SynthSpec SynthSpec::control() {
  SynthSpec spec;
  spec.machine_params = spec.human_params;
  return spec;
}

void validate(const SynthSpec& spec) {
  if (spec.n_machine < 1 || spec.n_human < 1) throw ValidationError("synth: counts must be >= 1");
  if (spec.t0 < 0) throw ValidationError("synth: t0 must be >= 0");
  if (spec.length_range.first < spec.t0 + 8)
    throw ValidationError("synth: minimum length must be >= t0 + 8");
  if (spec.length_range.second < spec.length_range.first)
    throw ValidationError("synth: length range is inverted");
  for (const ClassParams* p : {&spec.machine_params, &spec.human_params}) {
    if (!(p->ar_coefficient >= 0.0 && p->ar_coefficient < 1.0))
      throw ValidationError("synth: ar_coefficient must lie in [0, 1)");
    if (!(p->late_noise_sd >= 0.0 && p->initial_noise_sd >= 0.0 && p->drift_sd >= 0.0 &&
          p->level_sd >= 0.0))
      throw ValidationError("synth: noise standard deviations must be >= 0");
    if (!std::isfinite(p->level_mean)) throw ValidationError("synth: level_mean must be finite");
  }
}

namespace {

// Always consumes one draw so the stream layout does not depend on sd.
double gaussian(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double z = unit(rng);
  return sd * z;
}

Eigen::VectorXd synth_sequence(std::mt19937_64& rng, const ClassParams& p, int n, int t0) {
  Eigen::VectorXd d(n);
  double level = p.level_mean + gaussian(rng, p.level_sd);
  double state = 0.0;  // deviation from the level
  for (int t = 0; t < n; ++t) {
    level += gaussian(rng, p.drift_sd);
    state = p.ar_coefficient * state + gaussian(rng, p.late_noise_sd);
    double value = level + state;
    // Positions 1..t0 (1-based) carry extra unstable noise.
    if (t < t0) value += gaussian(rng, p.initial_noise_sd);
    d[t] = value;
  }
  return d;
}

}  // namespace

Corpus synth_corpus(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> length(spec.length_range.first, spec.length_range.second);

  Corpus corpus;
  corpus.records.reserve(static_cast<std::size_t>(spec.n_machine + spec.n_human));
  auto emit = [&](Label label, int index) {
    const bool machine = label == Label::machine;
    TokenScoreRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%c-%05d", machine ? 'm' : 'h', index);
    rec.id = id;
    rec.label = label;
    rec.source_model = machine ? "synth-lm" : "human";
    rec.domain = "synthetic";
    const int n = length(rng);
    rec.streams["logprob"] =
        synth_sequence(rng, machine ? spec.machine_params : spec.human_params, n, spec.t0);
    corpus.records.push_back(std::move(rec));
  };
  for (int i = 0; i < spec.n_machine; ++i) emit(Label::machine, i);
  for (int i = 0; i < spec.n_human; ++i) emit(Label::human, i);
  return corpus;
}

}  // namespace mgt
