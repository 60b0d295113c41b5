#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <map>

#include "ctu/pipeline.hpp"
#include "ctu/synthgen.hpp"
#include "test_helpers.hpp"

using namespace ctu;
namespace fs = std::filesystem;

namespace {

using Snapshot = std::map<std::string, std::string>;

Snapshot snapshot(const fs::path& dir) {
  Snapshot s;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) s[fs::relative(e.path(), dir).string()] = testing_util::read_file(e.path());
  return s;
}

fs::path write_synth_corpus(const testing_util::TempDir& dir, std::size_t users = 10, std::size_t events = 120) {
  synth::GenSpec spec;
  spec.seed = 31;
  spec.n_users = users;
  spec.events_per_user = events;
  spec.process = synth::Pareto{1.5, 3600};
  spec.toxicity_model = synth::TwoClassToxicity{0.25, 0.8, 0.05};
  spec.start_spread_days = 900;
  spec.emit_toxicity = false;
  const auto path = dir / "corpus.jsonl";
  testing_util::write_file(path, export_jsonl(synth::generate(spec)));
  return path;
}

RunConfig offline_config(const fs::path& input, const fs::path& out, std::size_t parallelism = 1) {
  RunConfig c;
  c.inputs = {input};
  c.output_dir = out;
  c.parallelism = parallelism;
  c.required_length = 120;
  return c;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CTU_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli_stderr(const std::string& args, int& code) {
  char tmpl[] = "/tmp/ctu_stderr_XXXXXX";
  const int fd = mkstemp(tmpl);
  close(fd);
  const std::string cmd = std::string(CTU_CLI_PATH) + " " + args + " >/dev/null 2>" + tmpl;
  const int status = std::system(cmd.c_str());
  code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto text = testing_util::read_file(tmpl);
  fs::remove(tmpl);
  return text;
}

}  // namespace

TEST(Pipeline, FullRunWritesEveryReportFile) {
  testing_util::QuietLogs quiet;
  testing_util::TempDir dir("full");
  const auto input = write_synth_corpus(dir);
  auto cfg = offline_config(input, dir / "out");
  cfg.svg = true;
  const auto result = run(cfg);
  ASSERT_EQ(result.stages.size(), 6u);
  for (const auto& s : result.stages) EXPECT_FALSE(s.skipped);

  const auto report = dir / "out" / "report";
  for (const std::string f :
       {"metrics.csv", "churn.csv", "classification.csv", "summary.json", "yearly_table.csv", "year_sets_ctu.csv",
        "year_sets_bu.csv", "user_yearly.csv", "scatter_toxicity_gini.tsv", "ecdf_mean_toxicity_all.tsv",
        "ecdf_mean_toxicity_ctu.tsv", "ecdf_mean_toxicity_bu.tsv", "ecdf_gini_all.tsv", "ecdf_burstiness_all_all.tsv",
        "ecdf_burstiness_toxic_ctu.tsv", "ecdf_burstiness_benign_bu.tsv", "ecdf_tweets_per_year_all.tsv",
        "ecdf_avg_life_weeks_all.tsv", "ecdf_cycles_all.tsv", "pdf_burstiness_all.tsv", "pdf_burstiness_ctu.tsv",
        "pdf_burstiness_bu.tsv"})
    EXPECT_TRUE(fs::exists(report / f)) << f;
  bool any_svg = false;
  for (const auto& e : fs::recursive_directory_iterator(report)) any_svg = any_svg || e.path().extension() == ".svg";
  EXPECT_TRUE(any_svg);

  const auto summary = nlohmann::json::parse(testing_util::read_file(report / "summary.json"));
  EXPECT_EQ(summary["groups"]["total"]["users"], 10);
  EXPECT_EQ(summary["groups"]["total"]["events"], 1200);
}

TEST(Pipeline, RerunSkipsEverythingAndKeepsBytes) {
  testing_util::QuietLogs quiet;
  testing_util::TempDir dir("rerun");
  const auto input = write_synth_corpus(dir);
  const auto cfg = offline_config(input, dir / "out");
  run(cfg);
  const auto before = snapshot(dir / "out");
  const auto again = run(cfg);
  for (const auto& s : again.stages) EXPECT_TRUE(s.skipped) << stage_name(s.stage);
  EXPECT_EQ(snapshot(dir / "out"), before);

  auto forced = cfg;
  forced.force = true;
  for (const auto& s : run(forced).stages) EXPECT_FALSE(s.skipped);
  EXPECT_EQ(snapshot(dir / "out"), before);
}

TEST(Pipeline, ChangedInputInvalidatesDownstream) {
  testing_util::QuietLogs quiet;
  testing_util::TempDir dir("invalidate");
  const auto input = write_synth_corpus(dir);
  auto cfg = offline_config(input, dir / "out");
  run(cfg);
  cfg.required_length.reset();
  testing_util::write_file(input, testing_util::read_file(input) +
                                      R"({"user_id":"zz","event_id":"x","timestamp":1577836800,"text":"hi"})" "\n");
  for (const auto& s : run(cfg).stages) EXPECT_FALSE(s.skipped) << stage_name(s.stage);
}

TEST(Pipeline, ParallelismDoesNotChangeOutput) {
  testing_util::QuietLogs quiet;
  testing_util::TempDir dir("par");
  const auto input = write_synth_corpus(dir, 40, 120);
  run(offline_config(input, dir / "p1", 1));
  run(offline_config(input, dir / "p8", 8));
  EXPECT_EQ(snapshot(dir / "p1" / "report"), snapshot(dir / "p8" / "report"));
  EXPECT_EQ(testing_util::read_file(dir / "p1" / "stages" / "scored.jsonl"),
            testing_util::read_file(dir / "p8" / "stages" / "scored.jsonl"));
}

TEST(Pipeline, StageSubsetsReuseEarlierOutputs) {
  testing_util::QuietLogs quiet;
  testing_util::TempDir dir("subset");
  const auto input = write_synth_corpus(dir);
  auto cfg = offline_config(input, dir / "out");
  cfg.stages = {Stage::ingest, Stage::score};
  run(cfg);
  cfg.stages = {Stage::metrics, Stage::classify};
  run(cfg);
  EXPECT_TRUE(fs::exists(dir / "out" / "report" / "classification.csv"));

  testing_util::TempDir empty("subset_empty");
  auto bare = offline_config(input, empty / "out");
  bare.stages = {Stage::classify};
  EXPECT_THROW(run(bare), ConfigError);
}

TEST(Pipeline, FailedStageLeavesNoPartialOutput) {
  testing_util::QuietLogs quiet;
  testing_util::TempDir dir("fail");
  testing_util::write_file(dir / "bad.jsonl",
                           R"({"user_id":"a","event_id":"1","timestamp":1577836800,"text":"x"})" "\n"
                           R"({"user_id":"a","event_id":"2","timestamp":1577836800,"toxicity":3})" "\n");
  auto cfg = offline_config(dir / "bad.jsonl", dir / "out");
  EXPECT_THROW(run(cfg), ValidationError);
  EXPECT_FALSE(fs::exists(dir / "out" / "stages" / "corpus.jsonl"));
  for (const auto& e : fs::recursive_directory_iterator(dir / "out")) EXPECT_FALSE(e.is_regular_file()) << e.path();
}

TEST(RunConfig, JsonParsingAndKeyHandling) {
  ::setenv("CTU_TEST_KEY", "secret", 1);
  const auto c = run_config_from_json(nlohmann::json::parse(R"({
    "inputs": ["a.jsonl"], "output_dir": "out", "required_length": 3200, "parallelism": 4,
    "stages": ["ingest", "score"],
    "scorer": {"mode": "remote", "endpoint": "http://localhost:9/x", "qps": 2, "api_key_env": "CTU_TEST_KEY"}
  })"),
                                      "/base");
  EXPECT_EQ(c.inputs.at(0), fs::path("/base/a.jsonl"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.required_length, 3200u);
  EXPECT_EQ(c.scorer.api_key, "secret");
  EXPECT_EQ(c.scorer.max_qps, 2.0);
  EXPECT_EQ(c.stages.size(), 2u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"scorer":{"api_key":"x"}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"stages":["bogus"]})")), ConfigError);
}

TEST(Cli, MissingApiKeyIsExitOneWithNoOutputs) {
  testing_util::TempDir dir("cli_key");
  const auto input = write_synth_corpus(dir);
  testing_util::write_file(dir / "run.json", R"({"inputs":["corpus.jsonl"],"output_dir":"out",
    "scorer":{"mode":"remote","endpoint":"http://127.0.0.1:9/v1","api_key_env":"CTU_UNSET_VARIABLE_FOR_TEST"}})");
  ::unsetenv("CTU_UNSET_VARIABLE_FOR_TEST");
  int code = 0;
  const auto err = cli_stderr("run --config " + (dir / "run.json").string(), code);
  EXPECT_EQ(code, 1);
  EXPECT_NE(err.find("API key"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, ExitCodes) {
  testing_util::TempDir dir("cli_codes");
  EXPECT_EQ(cli("ingest --input " + (dir / "nope.jsonl").string() + " --out " + (dir / "x.jsonl").string()), 2);
  testing_util::write_file(dir / "bad.jsonl", R"({"user_id":"a","event_id":"1","timestamp":1577836800,"toxicity":2})" "\n");
  EXPECT_EQ(cli("ingest --input " + (dir / "bad.jsonl").string() + " --out " + (dir / "x.jsonl").string()), 1);
  EXPECT_FALSE(fs::exists(dir / "x.jsonl"));
  EXPECT_EQ(cli("ingest --input " + (dir / "bad.jsonl").string() + " --out " + (dir / "x.jsonl").string() +
                " --on-bad-record skip_and_log"),
            0);
  EXPECT_EQ(cli("run --out-dir " + (dir / "o").string() + " --stages bogus"), 1);
  EXPECT_EQ(cli("no-such-command"), 1);
}

TEST(Cli, StageByStageMatchesRun) {
  testing_util::TempDir dir("cli_chain");
  testing_util::write_file(dir / "spec.json", R"({"seed": 5, "n_users": 12, "events_per_user": 60,
    "process": {"type": "poisson", "rate": 0.0001},
    "toxicity_model": {"type": "two_class", "p_toxic": 0.3, "v_toxic": 0.7, "v_benign": 0.05},
    "emit_toxicity": false, "start_spread_days": 400})");
  const auto d = [&](const char* n) { return (dir / n).string(); };
  ASSERT_EQ(cli("synth --spec " + d("spec.json") + " --out " + d("raw.jsonl")), 0);
  ASSERT_EQ(cli("ingest --input " + d("raw.jsonl") + " --out " + d("canon.jsonl")), 0);
  ASSERT_EQ(cli("score --input " + d("canon.jsonl") + " --out " + d("scored.jsonl")), 0);
  ASSERT_EQ(cli("metrics --input " + d("scored.jsonl") + " --out " + d("metrics.csv")), 0);
  ASSERT_EQ(cli("churn --input " + d("scored.jsonl") + " --out " + d("churn.csv")), 0);
  ASSERT_EQ(cli("classify --metrics " + d("metrics.csv") + " --out-dir " + d("cls")), 0);
  ASSERT_EQ(cli("report --input " + d("scored.jsonl") + " --out-dir " + d("rep")), 0);
  ASSERT_EQ(cli("run --input " + d("raw.jsonl") + " --out-dir " + d("all") + " --parallelism 3"), 0);

  const auto all = dir / "all" / "report";
  EXPECT_EQ(testing_util::read_file(dir / "metrics.csv"), testing_util::read_file(all / "metrics.csv"));
  EXPECT_EQ(testing_util::read_file(dir / "churn.csv"), testing_util::read_file(all / "churn.csv"));
  EXPECT_EQ(testing_util::read_file(dir / "cls" / "summary.json"), testing_util::read_file(all / "summary.json"));
  EXPECT_EQ(testing_util::read_file(dir / "scored.jsonl"),
            testing_util::read_file(dir / "all" / "stages" / "scored.jsonl"));
  EXPECT_EQ(snapshot(dir / "rep"), snapshot(all));
}
