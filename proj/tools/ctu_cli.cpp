// ctu: command-line driver for the timeline toxicity pipeline.
//
//   ctu synth    --spec spec.json --out corpus.jsonl
//   ctu ingest   --input a.jsonl --input b.csv --out corpus.jsonl
//   ctu score    --input corpus.jsonl --out scored.jsonl --scorer offline
//   ctu metrics  --input scored.jsonl --out metrics.csv
//   ctu churn    --input scored.jsonl --out churn.csv
//   ctu classify --metrics metrics.csv --out-dir report/
//   ctu report   --input scored.jsonl --out-dir report/
//   ctu run      --config run.json
//
// Exit status: 0 success, 1 validation/configuration failure, 2 I/O failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctu/pipeline.hpp"
#include "ctu/synthgen.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct ScorerFlags {
  std::string mode = "offline";
  std::string endpoint;
  std::string api_key_env;
  double qps = 1.0;
  int max_retries = 3;
  std::string cache;
  std::string attribute = "TOXICITY";
  std::size_t in_flight = 4;

  void add_to(CLI::App& app) {
    app.add_option("--scorer", mode, "Scorer backend")->check(CLI::IsMember({"remote", "offline"}));
    app.add_option("--endpoint", endpoint, "Remote scorer URL (Perspective-style comments:analyze)");
    app.add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
    app.add_option("--qps", qps, "Maximum remote request rate")->check(CLI::PositiveNumber);
    app.add_option("--max-retries", max_retries, "Retries on HTTP 429/5xx")->check(CLI::NonNegativeNumber);
    app.add_option("--cache", cache, "Remote score cache (JSONL)");
    app.add_option("--attribute", attribute, "Requested attribute name");
    app.add_option("--in-flight", in_flight, "Concurrent remote requests")->check(CLI::PositiveNumber);
  }

  // Only overrides the fields the user actually passed on the command line.
  void apply(const CLI::App& app, ctu::ScorerConfig& cfg) const {
    if (app.count("--scorer")) cfg.mode = ctu::parse_scorer_mode(mode);
    if (app.count("--endpoint")) cfg.endpoint_url = endpoint;
    if (app.count("--qps")) cfg.max_qps = qps;
    if (app.count("--max-retries")) cfg.max_retries = max_retries;
    if (app.count("--cache")) cfg.cache_path = cache;
    if (app.count("--attribute")) cfg.attribute = attribute;
    if (app.count("--in-flight")) cfg.max_in_flight = in_flight;
    if (app.count("--api-key-env")) {
      const char* key = std::getenv(api_key_env.c_str());
      if (!key || !*key) throw ctu::ConfigError("environment variable '" + api_key_env + "' is not set");
      cfg.api_key = key;
    }
  }
};

ctu::OnBadRecord parse_on_bad_record(const std::string& s) {
  return s == "skip_and_log" ? ctu::OnBadRecord::skip_and_log : ctu::OnBadRecord::fail;
}

ctu::EpochSeconds parse_floor(const std::string& s) {
  auto v = ctu::parse_timestamp(s);
  if (!v) throw ctu::ConfigError("cannot parse timestamp floor '" + s + "'");
  return *v;
}

nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ctu::IoError("cannot open '" + p.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ctu::ConfigError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

void write_corpus(const ctu::Corpus& c, const fs::path& out) {
  ctu::StageOutputs o;
  ctu::export_jsonl(c, o.open(out));
  o.commit();
}

int report_error(const std::exception& e, int code) {
  ctu::log::emit({{"level", "error"}, {"msg", e.what()}, {"exit", code}});
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consistently-toxic-user analysis of posting timelines"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress JSON log lines on stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  std::string synth_spec, synth_out;
  std::size_t synth_par = 1;
  synth->add_option("--spec", synth_spec, "Generator spec (JSON)")->required();
  synth->add_option("--out", synth_out, "Output corpus (JSONL)")->required();
  synth->add_option("--parallelism", synth_par)->check(CLI::PositiveNumber);

  // ingest
  auto* ing = app.add_subcommand("ingest", "Ingest, validate and canonicalize timelines");
  std::vector<std::string> ing_inputs;
  std::string ing_out, ing_format, ing_bad = "fail", ing_floor;
  std::size_t ing_len = 0, ing_par = 1;
  ing->add_option("--input", ing_inputs, "Input file(s); users split across files are merged")->required();
  ing->add_option("--out", ing_out, "Canonical corpus (JSONL)")->required();
  ing->add_option("--format", ing_format, "jsonl or csv (default: by extension)")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ing->add_option("--required-length", ing_len, "Keep only timelines with exactly this many events");
  ing->add_option("--on-bad-record", ing_bad)->check(CLI::IsMember({"fail", "skip_and_log"}));
  ing->add_option("--timestamp-floor", ing_floor, "Earliest accepted timestamp");
  ing->add_option("--parallelism", ing_par)->check(CLI::PositiveNumber);

  // score
  auto* sc = app.add_subcommand("score", "Attach toxicity scores to unscored events");
  std::string sc_in, sc_out;
  std::size_t sc_par = 1;
  ScorerFlags sc_flags;
  sc->add_option("--input", sc_in)->required();
  sc->add_option("--out", sc_out)->required();
  sc->add_option("--parallelism", sc_par, "Worker threads for the offline scorer")->check(CLI::PositiveNumber);
  sc_flags.add_to(*sc);

  // metrics
  auto* met = app.add_subcommand("metrics", "Per-user toxicity, Gini, burstiness and span");
  std::string met_in, met_out;
  std::size_t met_par = 1;
  met->add_option("--input", met_in)->required();
  met->add_option("--out", met_out)->required();
  met->add_option("--parallelism", met_par)->check(CLI::PositiveNumber);

  // churn
  auto* ch = app.add_subcommand("churn", "Per-user life/death churn decomposition");
  std::string ch_in, ch_out;
  std::size_t ch_par = 1;
  ch->add_option("--input", ch_in)->required();
  ch->add_option("--out", ch_out)->required();
  ch->add_option("--parallelism", ch_par)->check(CLI::PositiveNumber);

  // classify
  auto* cl = app.add_subcommand("classify", "Median-split CTU/BU classification");
  std::string cl_metrics, cl_out;
  bool cl_exact = false;
  cl->add_option("--metrics", cl_metrics, "metrics.csv from the metrics stage")->required();
  cl->add_option("--out-dir", cl_out, "Writes classification.csv and summary.json")->required();
  cl->add_flag("--exact-p", cl_exact, "Exact permutation p-value (n <= 12)");

  // report
  auto* rep = app.add_subcommand("report", "Write the full report directory for a scored corpus");
  std::string rep_in, rep_out, rep_scores;
  std::size_t rep_len = 0, rep_par = 1;
  bool rep_svg = false;
  rep->add_option("--input", rep_in)->required();
  rep->add_option("--out-dir", rep_out)->required();
  rep->add_option("--required-length", rep_len);
  rep->add_option("--user-scores", rep_scores, "CSV user_id,score (e.g. bot scores)");
  rep->add_option("--parallelism", rep_par)->check(CLI::PositiveNumber);
  rep->add_flag("--svg", rep_svg, "Also write SVG charts");

  // run
  auto* rn = app.add_subcommand("run", "Run the pipeline stages from a config file");
  std::string rn_config, rn_out, rn_scores, rn_format;
  std::vector<std::string> rn_inputs, rn_stages;
  std::size_t rn_par = 0, rn_len = 0;
  bool rn_force = false, rn_svg = false;
  ScorerFlags rn_flags;
  rn->add_option("--config", rn_config, "Run configuration (JSON)");
  rn->add_option("--input", rn_inputs);
  rn->add_option("--format", rn_format)->check(CLI::IsMember({"jsonl", "csv"}));
  rn->add_option("--out-dir", rn_out);
  rn->add_option("--stages", rn_stages, "Subset of ingest,score,metrics,churn,classify,report")->delimiter(',');
  rn->add_option("--parallelism", rn_par)->check(CLI::PositiveNumber);
  rn->add_option("--required-length", rn_len);
  rn->add_option("--user-scores", rn_scores);
  rn->add_flag("--force", rn_force, "Rerun stages even when outputs are up to date");
  rn->add_flag("--svg", rn_svg);
  rn_flags.add_to(*rn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }
  if (quiet) ctu::log::set_sink(nullptr);

  try {
    if (*synth) {
      const auto spec = ctu::synth::spec_from_json(read_json_file(synth_spec));
      write_corpus(ctu::synth::generate(spec, synth_par), synth_out);
    } else if (*ing) {
      ctu::IngestOptions opts;
      opts.on_bad_record = parse_on_bad_record(ing_bad);
      if (!ing_floor.empty()) opts.timestamp_floor = parse_floor(ing_floor);
      opts.parallelism = ing_par;
      std::vector<fs::path> paths(ing_inputs.begin(), ing_inputs.end());
      ctu::detail::CorpusBuilder builder(opts);
      for (const auto& p : paths)
        ctu::detail::ingest_into(p, ing_format.empty() ? ctu::format_from_path(p) : ctu::parse_input_format(ing_format),
                                 builder);
      auto corpus = builder.finish();
      if (ing_len) corpus = ctu::filter_by_length(std::move(corpus), ing_len);
      write_corpus(corpus, ing_out);
    } else if (*sc) {
      ctu::ScorerConfig cfg;
      sc_flags.apply(*sc, cfg);
      cfg.parallelism = sc_par;
      cfg.validate();
      write_corpus(ctu::score_corpus(ctu::load_corpus(sc_in, sc_par), cfg), sc_out);
    } else if (*met) {
      ctu::StageOutputs o;
      ctu::write_metrics_csv(ctu::compute_metrics(ctu::load_corpus(met_in, met_par), met_par), o.open(met_out));
      o.commit();
    } else if (*ch) {
      ctu::StageOutputs o;
      ctu::write_churn_csv(ctu::cohort_churn(ctu::load_corpus(ch_in, ch_par), ch_par), o.open(ch_out));
      o.commit();
    } else if (*cl) {
      std::ifstream in(cl_metrics, std::ios::binary);
      if (!in) throw ctu::IoError("cannot open '" + cl_metrics + "'");
      const auto metrics = ctu::read_metrics_csv(in);
      const auto summary =
          ctu::classify(metrics, cl_exact ? ctu::PValueMethod::exact_permutation : ctu::PValueMethod::t_approximation);
      ctu::StageOutputs o;
      ctu::write_classification_csv(summary, o.open(fs::path(cl_out) / "classification.csv"));
      o.write(fs::path(cl_out) / "summary.json", ctu::summary_json(summary, metrics).dump(2) + "\n");
      o.commit();
    } else if (*rep) {
      const auto corpus = ctu::load_corpus(rep_in, rep_par);
      const auto metrics = ctu::compute_metrics(corpus, rep_par);
      const auto churn = ctu::cohort_churn(corpus, rep_par);
      const auto summary = ctu::classify(metrics);
      std::optional<ctu::UserScoreTable> scores;
      if (!rep_scores.empty()) scores = ctu::attach_user_scores(rep_scores);
      const fs::path dir(rep_out);
      std::optional<std::size_t> len;
      if (rep_len) len = rep_len;
      ctu::StageOutputs o;
      ctu::write_metrics_csv(metrics, o.open(dir / "metrics.csv"));
      ctu::write_churn_csv(churn, o.open(dir / "churn.csv"));
      ctu::write_classification_csv(summary, o.open(dir / "classification.csv"));
      o.write(dir / "summary.json", ctu::summary_json(summary, metrics).dump(2) + "\n");
      ctu::write_report_files(o, dir, corpus, metrics, summary, churn, scores, len, rep_svg);
      o.commit();
    } else if (*rn) {
      ctu::RunConfig cfg;
      if (!rn_config.empty()) {
        const fs::path cfg_path(rn_config);
        cfg = ctu::run_config_from_json(read_json_file(cfg_path), cfg_path.parent_path());
      }
      if (!rn_inputs.empty()) cfg.inputs.assign(rn_inputs.begin(), rn_inputs.end());
      if (!rn_format.empty()) cfg.format = ctu::parse_input_format(rn_format);
      if (!rn_out.empty()) cfg.output_dir = rn_out;
      if (!rn_stages.empty()) {
        cfg.stages.clear();
        for (const auto& s : rn_stages) cfg.stages.insert(ctu::parse_stage(s));
      }
      if (rn_par) cfg.parallelism = rn_par;
      if (rn_len) cfg.required_length = rn_len;
      if (!rn_scores.empty()) cfg.user_scores = rn_scores;
      cfg.force = cfg.force || rn_force;
      cfg.svg = cfg.svg || rn_svg;
      rn_flags.apply(*rn, cfg.scorer);
      const auto result = ctu::run(cfg);
      std::size_t ran = 0;
      for (const auto& s : result.stages) ran += s.skipped ? 0 : 1;
      ctu::log::info("run", "pipeline finished",
                     {{"report_dir", result.report_dir.string()}, {"stages_run", ran},
                      {"stages_skipped", result.stages.size() - ran}});
    }
  } catch (const ctu::IoError& e) {
    return report_error(e, kExitIo);
  } catch (const ctu::RemoteError& e) {
    return report_error(e, kExitIo);
  } catch (const fs::filesystem_error& e) {
    return report_error(e, kExitIo);
  } catch (const ctu::Error& e) {
    return report_error(e, kExitValidation);
  }
  return 0;
}
