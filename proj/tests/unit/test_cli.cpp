#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "../support.hpp"
#include "cli/commands.hpp"
#include "cli/report.hpp"
#include "cli/suite_io.hpp"
#include "cli/trace.hpp"
#include "metalstm/checkpoint.hpp"
#include "metalstm/container.hpp"

using namespace metalstm;
using namespace metalstm::testing;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("metalstm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::string tiny_config(std::uint64_t iterations) const {
    return R"({"model": {"n_in": 2, "n_hidden": 4}, "learner": {"fc_sizes": [8, 8]},
      "generator": {"n_samples": 20}, "training": {"iterations": )" +
           std::to_string(iterations) + R"(, "seed": 4, "checkpoint_every": 10, "log_every": 10, "pool_size": 30},
      "output": {"checkpoint": ")" + path("ckpt.bin") + R"(", "loss_log": ")" + path("loss.log") + R"("}})";
  }

  void write_frozen_checkpoint(const std::string& name, std::size_t n_in = 2) const {
    Checkpoint c;
    c.model = ModelShape{n_in, 4, 1};
    c.learner = LearnerShape::for_model(c.model, {8, 8});
    c.params = frozen_learner(c.learner, std::vector<double>(param_count(c.model), 0.0));
    c.optimizer = Smorms3State::zeros(c.params.size());
    save_checkpoint(c, path(name));
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"bogus"}), 2);
  EXPECT_EQ(run({"gen", "--count", "2"}), 2);
  EXPECT_EQ(run({"gen", "--count", "x", "--out", path("s.bin")}), 2);
}

TEST_F(CliTest, GenIsDeterministic) {
  ASSERT_EQ(run({"gen", "--seed", "42", "--count", "4", "--out", path("a.bin")}), 0) << err_.str();
  ASSERT_EQ(run({"gen", "--seed", "42", "--count", "4", "--out", path("b.bin")}), 0);
  ASSERT_EQ(run({"gen", "--seed", "43", "--count", "4", "--out", path("c.bin")}), 0);
  EXPECT_EQ(io::read_file(path("a.bin")), io::read_file(path("b.bin")));
  EXPECT_NE(io::read_file(path("a.bin")), io::read_file(path("c.bin")));
}

TEST_F(CliTest, GenZeroCountIsUsageError) {
  EXPECT_EQ(run({"gen", "--count", "0", "--out", path("s.bin")}), 2);
  EXPECT_FALSE(fs::exists(path("s.bin")));
}

TEST_F(CliTest, GenEvaluationConfiguration) {
  write("eval.json", R"({"model": {"n_in": 5}, "generator": {"n_samples": 200, "beta_noise": 1.0}})");
  ASSERT_EQ(run({"gen", "--config", path("eval.json"), "--count", "3", "--out", path("s.bin"), "--csv-dir",
                 path("csv")}),
            0)
      << err_.str();
  const cli::Suite s = cli::load_suite(path("s.bin"));
  EXPECT_EQ(s.datasets.size(), 3u);
  EXPECT_EQ(s.generator.beta_noise, 1.0);
  for (const auto& d : s.datasets) {
    EXPECT_EQ(d.size(), 200u);
    EXPECT_EQ(d.n_in(), 5u);
  }
  EXPECT_TRUE(fs::exists(path("csv/dataset_0002.csv")));
  EXPECT_EQ(s.datasets, gen_suite(s.generator, 3, s.seed));
}

TEST_F(CliTest, SuiteRoundTripAndFingerprint) {
  GenConfig g;
  g.n_in = 2;
  const cli::Suite s = cli::generate_suite(g, 3, 5);
  const std::string bytes = cli::encode_suite(s);
  const cli::Suite back = cli::decode_suite(bytes);
  EXPECT_EQ(back.datasets, s.datasets);
  EXPECT_EQ(back.generator, s.generator);
  EXPECT_EQ(back.fingerprint(), s.fingerprint());
  EXPECT_EQ(cli::encode_suite(back), bytes);
  std::string bad = bytes;
  bad[1] = '?';
  EXPECT_THROW(cli::decode_suite(bad), io::BadMagic);
}

TEST_F(CliTest, MissingConfigExitsTwo) {
  EXPECT_EQ(run({"meta-train", "--config", path("missing.json")}), 2);
  write("bad.json", R"({"unknown": 1})");
  EXPECT_EQ(run({"meta-train", "--config", path("bad.json")}), 2);
}

TEST_F(CliTest, MetaTrainZeroIterationsWritesInitialAlpha) {
  write("cfg.json", tiny_config(0));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json")}), 0) << err_.str();
  const Checkpoint c = load_checkpoint(path("ckpt.bin"));
  EXPECT_EQ(c.iteration, 0u);
  EXPECT_EQ(c.params, init_alpha(tiny_learner(), init_seed(4)));
  EXPECT_NE(c.config_echo.find("\"seed\": 4"), std::string::npos) << c.config_echo;
}

TEST_F(CliTest, MetaTrainDeterministicLogsAndProgress) {
  write("cfg.json", tiny_config(30));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json")}), 0) << err_.str();
  EXPECT_NE(out_.str().find("iter=10 loss="), std::string::npos) << out_.str();
  const std::string log1 = io::read_file(path("loss.log"));
  const std::string ck1 = io::read_file(path("ckpt.bin"));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json")}), 0);
  EXPECT_EQ(io::read_file(path("loss.log")), log1);
  EXPECT_EQ(io::read_file(path("ckpt.bin")), ck1);

  std::istringstream lines(log1);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.substr(0, line.find('\t')), std::to_string(count));
    ++count;
  }
  EXPECT_EQ(count, 30u);
}

TEST_F(CliTest, MetaTrainResumeAndSeedOverride) {
  write("cfg.json", tiny_config(20));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json")}), 0);
  const std::string straight = io::read_file(path("ckpt.bin"));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json"), "--iterations", "10", "--out", path("half.bin"),
                 "--loss-log", path("half.log")}),
            0);
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json"), "--resume", path("half.bin"), "--out", path("rest.bin"),
                 "--loss-log", path("half.log")}),
            0);
  EXPECT_EQ(load_checkpoint(path("rest.bin")).params, load_checkpoint(path("ckpt.bin")).params);
  EXPECT_EQ(io::read_file(path("half.log")), io::read_file(path("loss.log")));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json"), "--seed", "99", "--out", path("other.bin")}), 0);
  EXPECT_EQ(load_checkpoint(path("other.bin")).seed, 99u);
  EXPECT_NE(io::read_file(path("other.bin")), straight);
}

TEST_F(CliTest, EvalFrozenStubScoresLn2) {
  write_frozen_checkpoint("stub.bin");
  write("gen.json", R"({"model": {"n_in": 2}})");
  ASSERT_EQ(run({"gen", "--config", path("gen.json"), "--count", "5", "--out", path("s.bin")}), 0);
  const std::string ckpt_before = io::read_file(path("stub.bin"));
  const std::string suite_before = io::read_file(path("s.bin"));
  ASSERT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--baseline", "logreg", "--out",
                 path("report.txt")}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("0.693"), std::string::npos) << out_.str();
  const cli::Report r = cli::parse_report(io::read_file(path("report.txt")));
  ASSERT_EQ(r.methods.size(), 2u);
  EXPECT_EQ(r.methods[0].name, "learned");
  EXPECT_NEAR(r.methods[0].score.mu, std::numbers::ln2, 1e-9);
  EXPECT_EQ(r.methods[1].name, "logreg");
  for (const auto& m : r.methods) {
    double acc = 0.0;
    for (double v : m.score.per_dataset) acc += v;
    EXPECT_NEAR(m.score.mu, acc / static_cast<double>(m.score.per_dataset.size()), 1e-12);
  }
  EXPECT_EQ(io::read_file(path("stub.bin")), ckpt_before);
  EXPECT_EQ(io::read_file(path("s.bin")), suite_before);

  ASSERT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--baseline", "logreg", "--out",
                 path("report2.txt")}),
            0);
  EXPECT_EQ(io::read_file(path("report.txt")), io::read_file(path("report2.txt")));
}

TEST_F(CliTest, EvalExternalScores) {
  write_frozen_checkpoint("stub.bin");
  write("gen.json", R"({"model": {"n_in": 2}})");
  ASSERT_EQ(run({"gen", "--config", path("gen.json"), "--count", "3", "--out", path("s.bin")}), 0);
  write("ext.txt", "0\t0.5\n1\t0.25\n2\t0.75\n");
  ASSERT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--external-scores",
                 path("ext.txt"), "--external-name", "svm", "--out", path("r.txt")}),
            0)
      << err_.str();
  const cli::Report r = cli::parse_report(io::read_file(path("r.txt")));
  ASSERT_EQ(r.methods.size(), 2u);
  EXPECT_EQ(r.methods[1].name, "svm");
  EXPECT_DOUBLE_EQ(r.methods[1].score.mu, 0.5);

  write("short.txt", "0\t0.5\n1\t0.25\n");
  EXPECT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--external-scores",
                 path("short.txt")}),
            2);
  write("dup.txt", "0\t0.5\n0\t0.25\n2\t0.1\n");
  EXPECT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--external-scores",
                 path("dup.txt")}),
            2);
}

TEST_F(CliTest, EvalShapeMismatchIsUsageError) {
  write_frozen_checkpoint("stub.bin", 3);
  write("gen.json", R"({"model": {"n_in": 2}})");
  ASSERT_EQ(run({"gen", "--config", path("gen.json"), "--count", "2", "--out", path("s.bin")}), 0);
  EXPECT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--out", path("r.txt")}), 2);
  EXPECT_FALSE(fs::exists(path("r.txt")));
  EXPECT_EQ(run({"eval", "--checkpoint", path("stub.bin"), "--suite", path("s.bin"), "--baseline", "svm"}), 2);
}

TEST_F(CliTest, EvalCorruptCheckpointIsRejected) {
  write("junk.bin", "not a checkpoint at all");
  write("gen.json", R"({"model": {"n_in": 2}})");
  ASSERT_EQ(run({"gen", "--config", path("gen.json"), "--count", "2", "--out", path("s.bin")}), 0);
  EXPECT_EQ(run({"eval", "--checkpoint", path("junk.bin"), "--suite", path("s.bin")}), 2);
}

TEST_F(CliTest, TraceRowsAndLossColumn) {
  write("cfg.json", tiny_config(20));
  ASSERT_EQ(run({"meta-train", "--config", path("cfg.json")}), 0);
  write("gen.json", R"({"model": {"n_in": 2}, "generator": {"n_samples": 30}})");
  ASSERT_EQ(run({"gen", "--config", path("gen.json"), "--count", "2", "--out", path("s.bin")}), 0);
  ASSERT_EQ(run({"trace", "--checkpoint", path("ckpt.bin"), "--suite", path("s.bin"), "--index", "1", "--out",
                 path("trace.csv")}),
            0)
      << err_.str();
  std::ifstream is(path("trace.csv"));
  std::string header, line;
  std::getline(is, header);
  EXPECT_EQ(header.rfind("t,flag,y,o,loss,test_mce,theta_0,", 0), 0u);
  EXPECT_NE(header.find("theta_16"), std::string::npos);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    if (rows > 30) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    const int y = std::stoi(cells[2]);
    const double o = std::strtod(cells[3].c_str(), nullptr);
    EXPECT_EQ(std::strtod(cells[4].c_str(), nullptr), cross_entropy(o, y)) << "row " << rows;
  }
  EXPECT_EQ(rows, 31u);

  EXPECT_EQ(run({"trace", "--checkpoint", path("ckpt.bin"), "--suite", path("s.bin"), "--index", "2", "--out",
                 path("t2.csv")}),
            2);
}

TEST(Report, FormatParseRoundTrip) {
  cli::Report r;
  r.suite_fingerprint = "1-abc";
  r.checkpoint_fingerprint = "def";
  r.taus = {3, 4};
  r.lengths = {10, 12};
  r.methods.push_back({"learned", summarize({0.1, 0.3})});
  r.methods.push_back({"logreg", summarize({1.0 / 3.0, 0.7})});
  const std::string text = cli::format_report(r);
  const cli::Report back = cli::parse_report(text);
  EXPECT_EQ(back.taus, r.taus);
  EXPECT_EQ(back.lengths, r.lengths);
  ASSERT_EQ(back.methods.size(), 2u);
  EXPECT_EQ(back.methods[1].score.per_dataset, r.methods[1].score.per_dataset);
  EXPECT_EQ(back.methods[1].score.mu, r.methods[1].score.mu);
  EXPECT_EQ(cli::format_report(back), text);
  EXPECT_NE(cli::format_table(r).find("0.200"), std::string::npos);
}

TEST(Trace, FrozenLearnerHoldsState) {
  const LabeledDataset d = tiny_dataset();
  std::vector<double> theta(17);
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = 0.1 * static_cast<double>(k) - 0.8;
  const auto rows = cli::compute_trace(frozen_learner(tiny_learner(), theta), tiny_model(), d);
  ASSERT_EQ(rows.size(), d.size() + 1);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < theta.size(); ++k) EXPECT_NEAR(row.theta[k], theta[k], 1e-12);
  }
  EXPECT_FALSE(rows.back().prediction.has_value());
  EXPECT_EQ(*rows[0].flag, 1);
  EXPECT_EQ(*rows[d.tau - 1].flag, 0);
}
