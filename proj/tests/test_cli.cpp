#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "oracles.hpp"
#include "shapes.hpp"

using namespace ffm;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("ffm_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(root_ / "in");
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
  std::ostringstream out_, err_;
};

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_F(CliTest, FfmConstantImage) {
  io::write_image_png(GrayImage(20, 20, 90), root_ / "in" / "flat.png");
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in").string()};
  cfg.out = root_ / "out";
  cfg.png16 = true;
  ASSERT_EQ(cli::cmd_ffm(cfg, out_, err_), 0) << err_.str();
  const auto map = io::read_ffm(root_ / "out" / "flat.ffm");
  EXPECT_EQ(map.width(), 20u);
  for (float v : map) EXPECT_EQ(v, 1.0f);
  EXPECT_TRUE(fs::exists(root_ / "out" / "flat.png"));
}

TEST_F(CliTest, FfmMatchesLibraryAndIsIdempotent) {
  const auto img = oracle::random_image(24, 18, 3);
  io::write_image_png(img, root_ / "in" / "a.png");
  io::write_pgm(img, root_ / "in" / "b.pgm");
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in" / "*").string()};
  cfg.out = root_ / "out";
  cfg.params.step = 2;
  ASSERT_EQ(cli::cmd_ffm(cfg, out_, err_), 0) << err_.str();
  const auto expected = io::encode_ffm(compute_ffm(img, cfg.params));
  EXPECT_EQ(file_bytes(root_ / "out" / "a.ffm"), expected);
  EXPECT_EQ(file_bytes(root_ / "out" / "b.ffm"), expected);
  ASSERT_EQ(cli::cmd_ffm(cfg, out_, err_), 0);
  EXPECT_EQ(file_bytes(root_ / "out" / "a.ffm"), expected);
}

TEST_F(CliTest, BadFileGivesExitOne) {
  io::write_image_png(GrayImage(8, 8, 1), root_ / "in" / "ok.png");
  std::ofstream(root_ / "in" / "broken.png") << "not a png";
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in").string()};
  cfg.out = root_ / "out";
  EXPECT_EQ(cli::cmd_ffm(cfg, out_, err_), 1);
  EXPECT_TRUE(fs::exists(root_ / "out" / "ok.ffm"));
  EXPECT_NE(err_.str().find("broken.png"), std::string::npos);
}

TEST_F(CliTest, InvalidParamsGiveExitTwo) {
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in").string()};
  cfg.out = root_ / "out";
  cfg.params.window = 4;
  EXPECT_EQ(cli::cmd_ffm(cfg, out_, err_), 2);
  cfg.params.window = 5;
  cfg.eval.threshold = 2.0;
  EXPECT_EQ(cli::cmd_eval(cfg, out_, err_), 2);
}

TEST_F(CliTest, WeightsAndExtract) {
  const auto ring = shapes::ring_mask(32);
  io::write_mask_png(ring, root_ / "in" / "ring.png");
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in" / "ring.png").string()};
  cfg.out = root_ / "out";
  ASSERT_EQ(cli::cmd_weights(cfg, out_, err_), 0) << err_.str();
  EXPECT_EQ(io::read_ffm(root_ / "out" / "ring.weights.ffm"), compute_ffm_label(ring, cfg.params));
  ASSERT_EQ(cli::cmd_extract(cfg, out_, err_), 0) << err_.str();
  EXPECT_EQ(io::read_mask(root_ / "out" / "ring_edge.png"), extract_edges(ring));
  EXPECT_EQ(io::read_mask(root_ / "out" / "ring_skeleton.png"), skeletonize(ring));
}

TEST_F(CliTest, FdTable) {
  io::write_image_png(GrayImage(32, 32, 5), root_ / "in" / "flat.png");
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in" / "flat.png").string()};
  ASSERT_EQ(cli::cmd_fd(cfg, out_, err_), 0) << err_.str();
  EXPECT_NE(out_.str().find("2.000000"), std::string::npos) << out_.str();
}

TEST_F(CliTest, EvalJsonLines) {
  fs::create_directories(root_ / "gt");
  const auto gt = shapes::ring_mask(24);
  io::write_mask_png(gt, root_ / "gt" / "x.png");
  io::write_mask_png(gt, root_ / "in" / "x.png");  // perfect prediction as an 8-bit image
  FloatMap low(24, 24, 0.1f);
  io::write_ffm(low, root_ / "in" / "y.ffm");
  io::write_mask_png(gt, root_ / "gt" / "y.png");

  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in").string()};
  cfg.gt_inputs = {(root_ / "gt").string()};
  ASSERT_EQ(cli::cmd_eval(cfg, out_, err_), 0) << err_.str();
  std::istringstream lines(out_.str());
  std::vector<nlohmann::json> recs;
  for (std::string line; std::getline(lines, line);) recs.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0]["image"], "x.png");
  EXPECT_EQ(recs[0]["iou"], 100.0);
  EXPECT_EQ(recs[0]["hd"], 0.0);
  EXPECT_EQ(recs[1]["image"], "y.ffm");
  EXPECT_TRUE(recs[1]["cl_dice"].is_null());
  EXPECT_TRUE(recs[1]["notes"].contains("cl_dice"));
  EXPECT_EQ(recs[2]["images"], 2);
  EXPECT_EQ(recs[2]["iou"], 50.0);
  EXPECT_EQ(recs[2]["counts"]["cl_dice"], 1);
  EXPECT_EQ(recs[2]["cl_dice"], 100.0);
  EXPECT_NE(err_.str().find("IoU"), std::string::npos);

  cfg.out = root_ / "report";
  std::ostringstream out2, err2;
  ASSERT_EQ(cli::cmd_eval(cfg, out2, err2), 0);
  std::ifstream f(root_ / "report" / "metrics.jsonl");
  std::stringstream file_text;
  file_text << f.rdbuf();
  EXPECT_EQ(file_text.str(), out_.str());
}

TEST_F(CliTest, EvalMismatchedStems) {
  fs::create_directories(root_ / "gt");
  io::write_mask_png(BinaryMask(4, 4), root_ / "in" / "a.png");
  io::write_mask_png(BinaryMask(4, 4), root_ / "gt" / "b.png");
  cli::JobConfig cfg;
  cfg.inputs = {(root_ / "in").string()};
  cfg.gt_inputs = {(root_ / "gt").string()};
  EXPECT_EQ(cli::cmd_eval(cfg, out_, err_), 2);
  EXPECT_NE(err_.str().find("no ground truth"), std::string::npos);
}

TEST_F(CliTest, BenchSingleRepetition) {
  cli::JobConfig cfg;
  cfg.bench_size = 64;
  cfg.repetitions = 1;
  cfg.threads = 1;
  ASSERT_EQ(cli::cmd_bench(cfg, out_, err_), 0) << err_.str();
  const auto rep = cli::run_bench(64, cfg.params, 1, 1);
  EXPECT_EQ(rep.samples_ms.size(), 1u);
  EXPECT_EQ(rep.compare_step, 2);
  EXPECT_GT(rep.median_ms, 0.0);
  cfg.bench_size = 10;
  EXPECT_EQ(cli::cmd_bench(cfg, out_, err_), 2);
}

TEST(ExpandInputs, DirectoriesGlobsLiterals) {
  const auto dir = fs::temp_directory_path() / ("ffm_glob_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  for (const char* n : {"b.png", "a.png", "c.txt", "d.pgm"}) std::ofstream(dir / n) << "x";
  const auto all = cli::expand_inputs({dir.string()});
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].filename(), "a.png");
  EXPECT_EQ(cli::expand_inputs({(dir / "*.png").string()}).size(), 2u);
  EXPECT_EQ(cli::expand_inputs({(dir / "missing.png").string()}).size(), 1u);
  fs::remove_all(dir);
}
