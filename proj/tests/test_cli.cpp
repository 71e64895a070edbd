#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "config.hpp"
#include "json.hpp"
#include "support/cli_chain.hpp"
#include "urlearn/bundle.hpp"
#include "urlearn/error.hpp"

using namespace testing_support;
using urlearn::cli::ConfigMap;
using urlearn::cli::RunConfig;

namespace {

std::vector<double> total_column(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::vector<double> totals;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      EXPECT_EQ(line, "iteration,recon_A,recon_B,jsd,total");
      continue;
    }
    totals.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  return totals;
}

}  // namespace

TEST(Config, FileCommentsAndOverrides) {
  TempDir dir("cfg");
  write_text(dir / "run.cfg", "# comment\n eta = 0.5  # trailing\n\nbasis=high\n");
  ConfigMap m;
  m.load_file(dir / "run.cfg");
  m.apply("k_nn=7");
  EXPECT_EQ(m.get("eta"), "0.5");
  EXPECT_EQ(m.get("basis"), "high");
  const auto c = RunConfig::from(m, dir.path());
  EXPECT_EQ(c.pipeline.eta, 0.5);
  EXPECT_EQ(c.pipeline.k_nn, 7);
  EXPECT_EQ(c.model, dir.path() / "model.urlm");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ConfigMap m;
  EXPECT_THROW(m.set("etaa", "1"), urlearn::ConfigError);
  EXPECT_THROW(m.apply("eta"), urlearn::ConfigError);
  EXPECT_THROW(m.load_file("/nonexistent.cfg"), urlearn::ConfigError);
  for (const auto& [key, value] :
       std::vector<std::pair<std::string, std::string>>{{"eta", "-1"},
                                                        {"eta", "abc"},
                                                        {"basis", "mid"},
                                                        {"mode", "semi"},
                                                        {"adapt", "maybe"},
                                                        {"synth.noise", "-0.1"},
                                                        {"basis", "explicit"},
                                                        {"cv.hops", "1,2;;3"}}) {
    ConfigMap bad;
    bad.set(key, value);
    EXPECT_THROW(RunConfig::from(bad, "."), urlearn::ConfigError) << key << "=" << value;
  }
}

TEST(Config, HashTracksContent) {
  ConfigMap a, b;
  EXPECT_EQ(a.hash_hex(), b.hash_hex());
  EXPECT_EQ(a.hash_hex().size(), 16u);
  b.set("eta", "2");
  EXPECT_NE(a.hash_hex(), b.hash_hex());
  EXPECT_EQ(urlearn::cli::fnv1a64(""), 0xcbf29ce484222325ULL);
}

TEST(Cli, FullChainProducesReport) {
  TempDir dir("chain");
  const auto r = run_chain(dir.path(), {"synth", "encode", "fit", "gallery", "predict", "eval"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(read_bytes(dir / "report.json"));
  ASSERT_TRUE(report.contains("accuracy"));
  EXPECT_GE(report["accuracy"].get<double>(), 0.0);
  EXPECT_EQ(report["command"], "eval");
  EXPECT_EQ(report["config"]["seed"], "3");
  const auto model = urlearn::MatrixBundle::load(dir / "model.urlm");
  EXPECT_EQ(model.meta("command"), "fit");
  EXPECT_EQ(model.meta("config_hash").size(), 16u);
}

TEST(Cli, LossTraceIsMonotone) {
  TempDir dir("trace");
  ASSERT_EQ(run_chain(dir.path(), {"synth", "encode", "fit"}).code, 0);
  const auto totals = total_column(dir / "loss_trace.csv");
  ASSERT_GT(totals.size(), 2u);
  for (std::size_t t = 1; t < totals.size(); ++t) EXPECT_LE(totals[t], totals[t - 1]) << "row " << t;
  const auto text = read_bytes(dir / "loss_trace.csv");
  EXPECT_EQ(text.rfind("# command: fit", 0), 0u);
}

TEST(Cli, AdaptAndCrossValidate) {
  TempDir dir("adapt");
  const auto r = run_chain(dir.path(), {"synth", "encode", "fit", "gallery", "adapt", "cv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto adapt = nlohmann::json::parse(read_bytes(dir / "adapt.json"));
  EXPECT_LE(adapt["mmd_after"].get<double>(), adapt["mmd_before"].get<double>());
  const auto cv = nlohmann::json::parse(read_bytes(dir / "cv.json"));
  EXPECT_TRUE(cv.contains("best_eta"));

  std::vector<std::string> args{"predict", "--out", dir.path().string(), "--seed", "3", "--set",
                                "gallery=" + (dir / "gallery_adapted.urlm").string()};
  const auto quick = quick_settings();
  args.insert(args.end(), quick.begin(), quick.end());
  const auto p = run_urlearn(args);
  EXPECT_EQ(p.code, 0) << p.err;
}

TEST(Cli, RerunsAreByteIdentical) {
  TempDir first("det1"), second("det2");
  ASSERT_EQ(run_chain(first.path(), all_commands()).code, 0);
  ASSERT_EQ(run_chain(second.path(), all_commands()).code, 0);
  const auto a = snapshot(first.path());
  const auto b = snapshot(second.path());
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, bytes] : a) EXPECT_TRUE(b.at(name) == bytes) << name;
}

TEST(Cli, ExitCodes) {
  TempDir dir("codes");
  EXPECT_EQ(run_urlearn({"frobnicate", "--out", dir.path().string()}).code, 2);
  EXPECT_EQ(run_urlearn({"fit", "--out", dir.path().string(), "--set", "eta=-1"}).code, 2);
  EXPECT_EQ(run_urlearn({"fit", "--out", dir.path().string(), "--set", "nope=1"}).code, 2);
  EXPECT_EQ(run_urlearn({"fit", "--out", dir.path().string(), "--config", "/missing.cfg"}).code, 2);
  const auto missing = run_urlearn({"encode", "--out", dir.path().string()});
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("error (io)"), std::string::npos) << missing.err;
  write_text(dir / "model.urlm", "garbage");
  write_text(dir / "encoded.urlm", "garbage");
  EXPECT_EQ(run_urlearn({"gallery", "--out", dir.path().string()}).code, 3);
}
