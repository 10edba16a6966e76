#include <sstream>

#include <gtest/gtest.h>

#include "phantom/cli.hpp"
#include "test_support.hpp"

namespace phantom {
namespace {

using nlohmann::json;

std::vector<std::string> problems_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ValidationError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& path) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.rfind(path + ":", 0) == 0; });
}

TEST(Config, EmptyDocumentGivesTableDefaults) {
  const auto cfg = parse_config(json::object());
  const auto& c = cfg.train.config;
  EXPECT_EQ(c.latent_dim, 64);
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_EQ(c.levels, 1);
  EXPECT_EQ(c.optimizer.eta, 0.0002);
  EXPECT_EQ(c.weights.lambda1, 1.0);
  EXPECT_EQ(c.weights.lambda2, 10.0);
  EXPECT_EQ(c.weights.lambda3, 5.0);
  EXPECT_EQ(c.weights.lambda4, 1.0);
  EXPECT_EQ(c.weights.lambda5, 0.1);
  EXPECT_EQ(c.weights.lambda_gp, 10.0);
  EXPECT_EQ(c.weights.beta, 1.0);
  EXPECT_EQ(c.weights.omega, (BlockWeights{1.0, 1.0, 1.0}));
  EXPECT_EQ(cfg.data.n_total, 100000);
  EXPECT_EQ(cfg.synthesize.n, 2000);
}

TEST(Config, NegativeLearningRateNamesField) {
  const auto p = problems_of({{"train", {{"optimizer", {{"eta", -0.001}}}}}});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_TRUE(mentions(p, "train.optimizer.eta"));
}

TEST(Config, ProportionsMustSumToOne) {
  const auto p = problems_of({{"data", {{"proportions", {0.6, 0.15, 0.1, 0.04, 0.01}}}}});
  EXPECT_TRUE(mentions(p, "data.proportions"));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_TRUE(mentions(problems_of({{"bogus", 1}}), "bogus"));
  EXPECT_TRUE(mentions(problems_of({{"train", {{"Z", 8}}}}), "train.Z"));
  EXPECT_TRUE(mentions(problems_of({{"train", {{"weights", {{"lambda9", 1}}}}}}), "train.weights.lambda9"));
}

TEST(Config, EveryViolationListed) {
  const auto p = problems_of({{"train", {{"latent_dim", 0}, {"optimizer", {{"eta", 0}}}, {"batch_size", "x"}}},
                              {"data", {{"test_fraction", 1.5}}}});
  EXPECT_TRUE(mentions(p, "train.latent_dim"));
  EXPECT_TRUE(mentions(p, "train.optimizer.eta"));
  EXPECT_TRUE(mentions(p, "train.batch_size"));
  EXPECT_TRUE(mentions(p, "data.test_fraction"));
  EXPECT_EQ(p.size(), 4u);
}

TEST(Config, OverridesAndEcho) {
  json doc = json::object();
  apply_overrides(doc, {"train.weights.lambda3=2.5", "train.levels=3", "evaluate.report_dir=out"});
  const auto cfg = parse_config(doc);
  EXPECT_EQ(cfg.train.config.weights.lambda3, 2.5);
  EXPECT_EQ(cfg.train.config.levels, 3);
  EXPECT_EQ(cfg.evaluate.report_dir, "out");
  EXPECT_THROW(apply_overrides(doc, {"novalue"}), ValidationError);
  // The echo parses back to the same configuration.
  const auto echo = to_json(cfg);
  EXPECT_EQ(to_json(parse_config(echo)).dump(), echo.dump());
}

TEST(Config, FileHandling) {
  testing::TempDir dir;
  EXPECT_THROW(validate_config(dir / "missing.json"), ValidationError);
  write_file_atomic(dir / "bad.json", "{ not json");
  EXPECT_THROW(validate_config(dir / "bad.json"), ValidationError);
  write_file_atomic(dir / "ok.json", R"({"train": {"iters_per_level": 7}})");
  EXPECT_EQ(validate_config(dir / "ok.json").train.config.iters_per_level, 7);
}

TEST(Config, PathsResolvedAgainstBase) {
  auto cfg = parse_config(json::object());
  resolve_paths(cfg, "/tmp/base");
  EXPECT_EQ(cfg.train.data_path, "/tmp/base/data/train.csv");
  EXPECT_EQ(cfg.report.metrics_path, "/tmp/base/report/metrics.json");
}

// ---------------------------------------------------------------------------
// CLI

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, ExitCodes) {
  testing::TempDir dir;
  EXPECT_EQ(cli({"nonsense"}).code, cli::kExitInvalid);
  const auto missing = cli({"train", "--config", (dir / "nope.json").string()});
  EXPECT_EQ(missing.code, cli::kExitInvalid);
  EXPECT_NE(missing.err.find("not found"), std::string::npos);
  const auto bad = cli({"train", "--set", "train.optimizer.eta=-1"});
  EXPECT_EQ(bad.code, cli::kExitInvalid);
  EXPECT_NE(bad.err.find("train.optimizer.eta"), std::string::npos);
  const auto no_data = cli({"train", "--set", "train.data_path=" + (dir / "absent.csv").string(), "--out",
                            (dir / "ck").string()});
  EXPECT_EQ(no_data.code, cli::kExitFailure);
  EXPECT_EQ(cli({"report", "--set", "novalue"}).code, cli::kExitInvalid);
}

TEST(Cli, DivergenceExitsWithThree) {
  testing::TempDir dir;
  ASSERT_EQ(cli({"gen-data", "--out", dir.path().string(), "--set", "data.n_total=300"}).code, 0);
  const auto r = cli({"train", "--out", (dir / "ck").string(), "--set",
                      "train.data_path=" + (dir / "train.csv").string(), "--set", "train.optimizer.eta=1e6",
                      "--set", "train.iters_per_level=50", "--set", "train.weights.lambda1=1e6"});
  EXPECT_EQ(r.code, cli::kExitDivergence) << r.err;
  EXPECT_NE(r.err.find("term="), std::string::npos);
}

TEST(Cli, PipelineWritesArtifacts) {
  testing::TempDir dir;
  const auto data = dir / "data";
  const auto gen = cli({"gen-data", "--out", data.string(), "--seed", "5", "--set", "data.n_total=1000"});
  ASSERT_EQ(gen.code, 0) << gen.err;
  for (const char* f : {"benchmark.csv", "train.csv", "test.csv", "metadata.json", "resolved_config.json",
                        "run_metadata.json"}) {
    EXPECT_TRUE(fs::exists(data / f)) << f;
  }
  const auto bench = read_csv(data / "benchmark.csv");
  const auto c = bench.class_counts();
  EXPECT_EQ(std::vector<long>(c.begin(), c.end()), (std::vector<long>{700, 150, 100, 40, 10}));
  EXPECT_EQ(read_csv(data / "test.csv").rows(), 200);
  const auto resolved = json::parse(read_file(data / "resolved_config.json"));
  EXPECT_EQ(resolved["data"]["seed"], 5);
  EXPECT_EQ(resolved["data"]["n_total"], 1000);
  EXPECT_TRUE(resolved["data"]["output_dir"].get<std::string>().front() == '/');
  EXPECT_FALSE(resolved.dump().find("utc") != std::string::npos);

  const auto ck = dir / "ck";
  const auto train = cli({"train", "--out", ck.string(), "--set", "train.data_path=" + (data / "train.csv").string(),
                          "--set", "train.iters_per_level=5", "--set", "train.stabilization_steps=2"});
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_TRUE(fs::exists(ck / "manifest.json"));
  EXPECT_TRUE(fs::exists(ck / "stabilization.json"));
  const auto log = read_file(ck / "training_log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 6);

  const auto syn = dir / "syn";
  const auto s = cli({"synthesize", "--out", syn.string(), "--set", "synthesize.checkpoint_dir=" + ck.string(),
                      "--set", "synthesize.n=300"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(read_csv(syn / "synthetic.csv").rows(), 300);
  const auto bad_counts = cli({"synthesize", "--out", syn.string(), "--set",
                               "synthesize.checkpoint_dir=" + ck.string(), "--set", "synthesize.n=10", "--set",
                               "synthesize.label_counts=[1,1,1,1,1]"});
  EXPECT_EQ(bad_counts.code, cli::kExitInvalid);

  const auto rep = dir / "rep";
  const auto e = cli({"evaluate", "--out", rep.string(), "--set", "evaluate.real_path=" + (data / "train.csv").string(),
                      "--set", "evaluate.real_test_path=" + (data / "test.csv").string(), "--set",
                      "evaluate.synth_path=" + (syn / "synthetic.csv").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  for (const char* f : {"metrics.json", "report.txt", "plots.json", "density_real.csv", "density_synthetic.csv",
                        "nn_histogram.csv"}) {
    EXPECT_TRUE(fs::exists(rep / f)) << f;
  }

  const auto out = dir / "rendered";
  const auto r = cli({"report", "--out", out.string(), "--set", "report.metrics_path=" + (rep / "metrics.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, read_file(rep / "report.txt"));
  EXPECT_NE(r.out.find("weighted avg"), std::string::npos);
}

TEST(Cli, EvaluateIdentityRegime) {
  testing::TempDir dir;
  ASSERT_EQ(cli({"gen-data", "--out", dir.path().string(), "--set", "data.n_total=800"}).code, 0);
  const auto train = (dir / "train.csv").string();
  const auto r = cli({"evaluate", "--out", (dir / "rep").string(), "--set", "evaluate.real_path=" + train, "--set",
                      "evaluate.synth_path=" + train, "--set", "evaluate.real_test_path=" + (dir / "test.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(read_file(dir / "rep" / "metrics.json"));
  EXPECT_EQ(m["fidelity"]["ks_statistic"].get<double>(), 0.0);
  EXPECT_EQ(m["fidelity"]["wasserstein1"].get<double>(), 0.0);
  const auto& u = m["utility"];
  EXPECT_EQ(u[0]["regime"], "real_only");
  EXPECT_EQ(u[1]["regime"], "synthetic_only");
  EXPECT_EQ(u[0]["f1"], u[1]["f1"]);
  EXPECT_EQ(u[0]["auc"], u[1]["auc"]);
}

TEST(Cli, ReportRejectsMalformedMetrics) {
  testing::TempDir dir;
  write_file_atomic(dir / "m.json", "{}");
  const auto r = cli({"report", "--out", dir.path().string(), "--set", "report.metrics_path=" + (dir / "m.json").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
}

}  // namespace
}  // namespace phantom
