#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgt/evaluation.hpp"
#include "mgt/joint_inference.hpp"
#include "mgt/local_calibration.hpp"
#include "mgt/score_model.hpp"

namespace mgt::cli {

namespace {

enum class Format { csv, jsonl };

struct Options {
  // shared
  std::string in, out, model_file, method;
  std::string format = "csv";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  // calibration / rules / fusion
  std::optional<double> mrf_w, lambda;
  int mrf_t0 = 20, mrf_iters = 10, rules_k = 10, rules_t0 = 20;
  std::string rule_mode = "support", stats_input = "raw";
  // fit
  std::string train, val;
  // detect
  std::string dump_calibrated;
  // eval
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::string train_source, baseline_out;
  double fpr = 0.01;
  // analyze
  std::string kind = "khop", stream = "logprob";
  std::vector<int> ks{1, 5, 10, 20, 50};
  int t0 = 20;
  // synth
  SynthSpec synth;
  bool control = false;
};

// Writes to `path`, or to `fallback` when path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

Format parse_format(const std::string& name) { return name == "jsonl" ? Format::jsonl : Format::csv; }

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig c;
  c.method = DetectorMethod::by_name(o.method);
  c.mrf_t0 = o.mrf_t0;
  c.mrf_iters = o.mrf_iters;
  c.rules_k = o.rules_k;
  c.rules_t0 = o.rules_t0;
  c.fixed_w = o.mrf_w;
  c.fixed_lambda = o.lambda;
  c.rule_mode = o.rule_mode == "probabilistic" ? RuleMode::probabilistic : RuleMode::support;
  c.stats_on_calibrated = o.stats_input == "calibrated";
  validate(c);
  return c;
}

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--mrf-w", o.mrf_w, "Fix the uniform MRF weight w (default: tuned on validation)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--mrf-t0", o.mrf_t0, "Initial-part length for the positional weight")
      ->capture_default_str();
  cmd->add_option("--mrf-iters", o.mrf_iters, "Mean-field iterations T")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--rules-k", o.rules_k, "Buckets per statistic K")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  cmd->add_option("--rules-t0", o.rules_t0, "Latter-part start for global statistics")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "Fix the fusion weight (default: tuned on validation)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--rule-mode", o.rule_mode, "Rule branch scorer")
      ->check(CLI::IsMember({"support", "probabilistic"}))
      ->capture_default_str();
  cmd->add_option("--stats-input", o.stats_input, "Token scores fed to the global statistics")
      ->check(CLI::IsMember({"raw", "calibrated"}))
      ->capture_default_str();
}

void run_synth(const Options& o, std::ostream& out) {
  SynthSpec spec = o.control ? SynthSpec::control() : SynthSpec{};
  spec.n_machine = o.synth.n_machine;
  spec.n_human = o.synth.n_human;
  spec.length_range = o.synth.length_range;
  spec.t0 = o.synth.t0;
  spec.seed = o.synth.seed;
  const Corpus corpus = synth_corpus(spec);
  Sink sink(o.out, out);
  serialize_corpus(corpus, *sink);
}

void run_fit(const Options& o) {
  const auto config = pipeline_config(o);
  const auto pipeline = fit(read_corpus_file(o.train), read_corpus_file(o.val), config);
  save_pipeline(pipeline, o.model_file);
}

void run_detect(const Options& o, std::ostream& out) {
  const auto pipeline = load_pipeline(o.model_file);
  const Corpus corpus = read_corpus_file(o.in);
  const auto batch = detect_batch(corpus, pipeline, o.threads);

  Sink sink(o.out, out);
  std::ostream& os = *sink;
  os << std::setprecision(17);
  if (parse_format(o.format) == Format::csv) {
    os << "id,F,f_enh,r_rule,error\n";
    for (const auto& e : batch) {
      os << e.id << ',';
      if (e.scores)
        os << e.scores->F << ',' << e.scores->f_enh << ',' << e.scores->r_rule << ",\n";
      else
        os << ",,," << std::quoted(e.error, '"', '"') << '\n';
    }
  } else {
    for (const auto& e : batch) {
      nlohmann::json j{{"id", e.id}};
      if (e.scores) {
        j["F"] = e.scores->F;
        j["f_enh"] = e.scores->f_enh;
        j["r_rule"] = e.scores->r_rule;
      } else {
        j["error"] = e.error;
      }
      os << j.dump() << '\n';
    }
  }

  if (!o.dump_calibrated.empty()) {
    Corpus dumped;
    for (const auto& rec : corpus.records) {
      TokenScoreRecord copy = rec;
      try {
        copy.streams["calibrated"] = calibrated_scores(rec, pipeline.method, pipeline.calib);
      } catch (const CapabilityError&) {
        continue;
      }
      dumped.records.push_back(std::move(copy));
    }
    write_corpus_file(dumped, o.dump_calibrated);
  }
}

void write_report(const MetricReport& report, Format format, std::ostream& os) {
  if (format == Format::csv)
    report.write_csv(os);
  else
    report.write_jsonl(os);
}

void run_eval(const Options& o, std::ostream& out) {
  ExperimentConfig config;
  config.pipeline = pipeline_config(o);
  config.seeds = o.seeds;
  config.train_source = o.train_source;
  config.fpr_budget = o.fpr;
  config.threads = o.threads;
  const auto result = run_experiment(read_corpus_file(o.in), config);
  const auto format = parse_format(o.format);
  Sink sink(o.out, out);
  write_report(result.enhanced, format, *sink);
  if (!o.baseline_out.empty()) {
    Sink base(o.baseline_out, out);
    write_report(result.base, format, *base);
  }
}

void run_analyze(const Options& o, std::ostream& out) {
  const Corpus corpus = read_corpus_file(o.in);
  const auto format = parse_format(o.format);
  Sink sink(o.out, out);
  std::ostream& os = *sink;
  os << std::setprecision(10);
  if (o.kind == "khop") {
    if (format == Format::csv) os << "k,mad\n";
    for (int k : o.ks) {
      const double mad = khop_mad(corpus, k, o.stream);
      if (format == Format::csv)
        os << k << ',' << mad << '\n';
      else
        os << nlohmann::json{{"k", k}, {"mad", mad}}.dump() << '\n';
    }
  } else if (o.kind == "position") {
    const auto mad = positionwise_mad(corpus, o.stream);
    if (format == Format::csv) os << "t,mad\n";
    for (Eigen::Index t = 0; t < mad.size(); ++t) {
      if (format == Format::csv)
        os << t + 1 << ',' << mad[t] << '\n';
      else
        os << nlohmann::json{{"t", t + 1}, {"mad", mad[t]}}.dump() << '\n';
    }
  } else {
    const auto rows = stat_distributions(corpus, o.t0, o.stream);
    if (format == Format::csv) {
      write_stat_csv(rows, os);
    } else {
      for (const auto& r : rows) {
        nlohmann::json j{{"id", r.id}, {"label", std::string(to_string(r.label))}};
        for (int m = 0; m < kNumStatistics; ++m) j[statistic_names()[m]] = r.stats.z[m];
        j["degenerate"] = r.stats.degenerate;
        os << j.dump() << '\n';
      }
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{
      "Contextual token-relation enhancement for metric-based machine-generated text detection.\n"
      "Option precedence: command-line flags > --config file > built-in defaults.",
      "mgtdetect"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.fallthrough();
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic score corpus");
  synth->add_option("--out", o.out, "Output score file (default: stdout)");
  synth->add_option("--seed", o.synth.seed, "Generator seed")->capture_default_str();
  synth->add_option("--n-machine", o.synth.n_machine, "Machine texts")->check(CLI::PositiveNumber);
  synth->add_option("--n-human", o.synth.n_human, "Human texts")->check(CLI::PositiveNumber);
  synth->add_option("--min-len", o.synth.length_range.first, "Minimum sequence length");
  synth->add_option("--max-len", o.synth.length_range.second, "Maximum sequence length");
  synth->add_option("--t0", o.synth.t0, "Unstable initial-part length");
  synth->add_flag("--control", o.control, "Draw both classes from the human generator");

  auto* fit_cmd = app.add_subcommand("fit", "Fit thresholds, supports and fusion weights");
  fit_cmd->add_option("--method", o.method, "Base detector")->required()->check(CLI::IsMember(detector_names()));
  fit_cmd->add_option("--train", o.train, "Training score file")->required();
  fit_cmd->add_option("--val", o.val, "Validation score file")->required();
  fit_cmd->add_option("--model-file", o.model_file, "Where to write the fitted pipeline")->required();
  add_model_flags(fit_cmd, o);

  auto* detect_cmd = app.add_subcommand("detect", "Score records with a fitted pipeline");
  detect_cmd->add_option("--model-file", o.model_file, "Fitted pipeline")->required();
  detect_cmd->add_option("--in", o.in, "Score file to detect")->required();
  detect_cmd->add_option("--out", o.out, "Output file (default: stdout)");
  detect_cmd->add_option("--dump-calibrated", o.dump_calibrated,
                         "Also write the input with a 'calibrated' stream added");

  auto* eval_cmd = app.add_subcommand("eval", "Multi-seed split / fit / test experiment");
  eval_cmd->add_option("--in", o.in, "Score corpus")->required();
  eval_cmd->add_option("--method", o.method, "Base detector")->required()->check(CLI::IsMember(detector_names()));
  eval_cmd->add_option("--seeds", o.seeds, "Split seeds")->delimiter(',');
  eval_cmd->add_option("--train-source", o.train_source, "Machine source used for training");
  eval_cmd->add_option("--fpr", o.fpr, "FPR budget for TPR@FPR")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--out", o.out, "Enhanced-detector report (default: stdout)");
  eval_cmd->add_option("--baseline-out", o.baseline_out, "Base-detector report");
  add_model_flags(eval_cmd, o);

  auto* analyze_cmd = app.add_subcommand("analyze", "Token-score relation statistics");
  analyze_cmd->add_option("--in", o.in, "Score corpus")->required();
  analyze_cmd->add_option("--kind", o.kind, "khop | position | stats")
      ->check(CLI::IsMember({"khop", "position", "stats"}));
  analyze_cmd->add_option("--stream", o.stream, "Stream to analyze");
  analyze_cmd->add_option("--ks", o.ks, "Hop sizes for --kind khop")->delimiter(',');
  analyze_cmd->add_option("--t0", o.t0, "Latter-part start for --kind stats");
  analyze_cmd->add_option("--out", o.out, "Output file (default: stdout)");

  for (auto* cmd : {detect_cmd, eval_cmd, analyze_cmd}) {
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (synth->parsed()) run_synth(o, out);
    if (fit_cmd->parsed()) run_fit(o);
    if (detect_cmd->parsed()) run_detect(o, out);
    if (eval_cmd->parsed()) run_eval(o, out);
    if (analyze_cmd->parsed()) run_analyze(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.data_error() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace mgt::cli
