#include "mgt/joint_inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "mgt/metrics.hpp"

namespace mgt {

using nlohmann::json;

void validate(const PipelineConfig& config) {
  if (config.mrf_iters < 1) throw ConfigError("--mrf-iters must be >= 1");
  if (config.rules_k < 2) throw ConfigError("--rules-k must be >= 2");
  if (config.rules_t0 < 0) throw ConfigError("--rules-t0 must be >= 0");
  auto check_grid = [](const std::vector<double>& grid, const std::optional<double>& fixed,
                       const char* what) {
    if (fixed) {
      if (!(*fixed >= 0.0) || !std::isfinite(*fixed))
        throw ConfigError(std::string(what) + " must be finite and >= 0");
      return;
    }
    if (grid.empty()) throw ConfigError(std::string(what) + " grid is empty");
    for (double v : grid)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(what) + " grid values must be finite and >= 0");
  };
  check_grid(config.w_grid, config.fixed_w, "w");
  check_grid(config.lambda_grid, config.fixed_lambda, "lambda");
}

double EnhNorm::operator()(double x) const {
  if (max > min) return std::clamp((x - min) / (max - min), 0.0, 1.0);
  return x > min ? 1.0 : (x < min ? 0.0 : 0.5);
}

namespace {

StatVector record_statistics(const TokenScoreRecord& record, const DetectorMethod& method,
                             const CalibrationParams& calib, int t0, bool on_calibrated) {
  if (on_calibrated) return global_statistics(calibrated_scores(record, method, calib), t0);
  return global_statistics(token_scores(record, method), t0);
}

RuleModel fit_rules(const Corpus& train, const PipelineConfig& config,
                    const CalibrationParams& calib) {
  std::vector<LabelledStats> items;
  items.reserve(train.size());
  for (const auto& rec : train.records) {
    require_capabilities(rec, config.method);
    items.push_back({record_statistics(rec, config.method, calib, config.rules_t0,
                                       config.stats_on_calibrated),
                     rec.label});
  }
  return fit_rule_model(items, config.rules_k, config.rules_t0);
}

double rule_score(const StatVector& stats, const RuleModel& model, RuleMode mode) {
  return mode == RuleMode::support ? rule_support(stats, model) : rule_probabilistic(stats, model);
}

bool has_both_labels(const Corpus& corpus) {
  bool human = false, machine = false;
  for (const auto& rec : corpus.records) (rec.label == Label::machine ? machine : human) = true;
  return human && machine;
}

}  // namespace

FittedPipeline fit(const Corpus& train, const Corpus& val, const PipelineConfig& config) {
  validate(config);
  if (!has_both_labels(train)) throw FitError("training set must contain both labels");
  if (val.empty()) throw FitError("validation set is empty");
  if (!has_both_labels(val)) throw FitError("validation set must contain both labels");

  const std::vector<double> w_grid =
      config.fixed_w ? std::vector<double>{*config.fixed_w} : config.w_grid;
  const std::vector<double> lambda_grid =
      config.fixed_lambda ? std::vector<double>{*config.fixed_lambda} : config.lambda_grid;
  const auto val_labels = labels_of(val);

  std::optional<RuleModel> raw_rules;
  if (!config.stats_on_calibrated)
    raw_rules = fit_rules(train, config, CalibrationParams::uniform(0.0, config.mrf_t0, config.mrf_iters));

  FittedPipeline best;
  bool have_best = false;
  for (double w : w_grid) {
    const auto calib = CalibrationParams::uniform(w, config.mrf_t0, config.mrf_iters);
    RuleModel rules = raw_rules ? *raw_rules : fit_rules(train, config, calib);

    EnhNorm norm{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& rec : train.records) {
      const double e = enhance(rec, config.method, calib);
      norm.min = std::min(norm.min, e);
      norm.max = std::max(norm.max, e);
    }

    std::vector<double> enh(val.size()), rule(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      const auto& rec = val.records[i];
      enh[i] = norm(enhance(rec, config.method, calib));
      rule[i] = rule_score(record_statistics(rec, config.method, calib, config.rules_t0,
                                             config.stats_on_calibrated),
                           rules, config.rule_mode);
    }

    std::vector<double> fused(val.size());
    for (double lambda : lambda_grid) {
      for (std::size_t i = 0; i < val.size(); ++i) fused[i] = enh[i] + lambda * rule[i];
      const double a = auroc(fused, val_labels);
      // Strictly better only; ties keep the smaller lambda, then the smaller w.
      const bool better =
          !have_best || a > best.val_auroc ||
          (a == best.val_auroc &&
           (lambda < best.lambda || (lambda == best.lambda && w < best.calib.W(0, 0))));
      if (better) {
        best.method = config.method;
        best.calib = calib;
        best.rules = rules;
        best.lambda = lambda;
        best.enh_norm = norm;
        best.rule_mode = config.rule_mode;
        best.stats_on_calibrated = config.stats_on_calibrated;
        best.val_auroc = a;
        have_best = true;
      }
    }
  }
  return best;
}

ScoreBreakdown score(const TokenScoreRecord& record, const FittedPipeline& pipeline) {
  require_capabilities(record, pipeline.method);
  ScoreBreakdown out;
  out.f_enh = enhance(record, pipeline.method, pipeline.calib);
  const auto stats = record_statistics(record, pipeline.method, pipeline.calib, pipeline.rules.t0,
                                       pipeline.stats_on_calibrated);
  out.r_rule = rule_score(stats, pipeline.rules, pipeline.rule_mode);
  out.F = pipeline.enh_norm(out.f_enh) + pipeline.lambda * out.r_rule;
  return out;
}

double detect(const TokenScoreRecord& record, const FittedPipeline& pipeline) {
  return score(record, pipeline).F;
}

std::vector<BatchEntry> detect_batch(const Corpus& corpus, const FittedPipeline& pipeline,
                                     unsigned threads) {
  std::vector<BatchEntry> out(corpus.size());
  auto work = [&](std::size_t i) {
    const auto& rec = corpus.records[i];
    out[i].id = rec.id;
    try {
      out[i].scores = score(rec, pipeline);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(corpus.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < corpus.size(); i = next++) work(i);
    });
  pool.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr int kPipelineFormatVersion = 1;
}

json to_json(const FittedPipeline& p) {
  json doc;
  doc["format"] = "mgt-pipeline";
  doc["version"] = kPipelineFormatVersion;
  doc["method"] = p.method.name();
  doc["calibration"] = {
      {"W", {{p.calib.W(0, 0), p.calib.W(0, 1)}, {p.calib.W(1, 0), p.calib.W(1, 1)}}},
      {"t0", p.calib.t0},
      {"iters", p.calib.iters}};
  doc["lambda"] = p.lambda;
  doc["enh_norm"] = {{"min", p.enh_norm.min}, {"max", p.enh_norm.max}};
  doc["rule_mode"] = p.rule_mode == RuleMode::support ? "support" : "probabilistic";
  doc["stats_input"] = p.stats_on_calibrated ? "calibrated" : "raw";
  doc["val_auroc"] = p.val_auroc;
  doc["rules"] = to_json(p.rules);
  return doc;
}

FittedPipeline pipeline_from_json(const json& doc) {
  try {
    if (doc.at("version").get<int>() != kPipelineFormatVersion)
      throw ValidationError("unsupported pipeline version");
    FittedPipeline p;
    p.method = DetectorMethod::by_name(doc.at("method").get<std::string>());
    const auto& c = doc.at("calibration");
    const auto& w = c.at("W");
    p.calib.W << w.at(0).at(0).get<double>(), w.at(0).at(1).get<double>(),
        w.at(1).at(0).get<double>(), w.at(1).at(1).get<double>();
    p.calib.t0 = c.at("t0").get<int>();
    p.calib.iters = c.at("iters").get<int>();
    p.lambda = doc.at("lambda").get<double>();
    p.enh_norm = {doc.at("enh_norm").at("min").get<double>(), doc.at("enh_norm").at("max").get<double>()};
    const auto mode = doc.at("rule_mode").get<std::string>();
    if (mode != "support" && mode != "probabilistic") throw ValidationError("unknown rule_mode");
    p.rule_mode = mode == "support" ? RuleMode::support : RuleMode::probabilistic;
    p.stats_on_calibrated = doc.at("stats_input").get<std::string>() == "calibrated";
    p.val_auroc = doc.value("val_auroc", 0.0);
    p.rules = rule_model_from_json(doc.at("rules"));
    if (!(p.lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    if (!(p.enh_norm.min <= p.enh_norm.max)) throw ValidationError("enh_norm min exceeds max");
    validate(p.calib);
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed pipeline: ") + e.what());
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("malformed pipeline: ") + e.what());
  }
}

void save_pipeline(const FittedPipeline& pipeline, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open model file '" + path + "' for writing");
  out << to_json(pipeline).dump(2) << '\n';
}

FittedPipeline load_pipeline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  return pipeline_from_json(doc);
}

}  // namespace mgt
