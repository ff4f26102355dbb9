#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

unsigned parse_metrics(const std::string& list) {
  static const std::map<std::string, unsigned> names = {
      {"iou", ffm::kIoU},       {"acc", ffm::kAcc},     {"auc", ffm::kAuc},
      {"cldice", ffm::kClDice}, {"betti", ffm::kBetti}, {"hd", ffm::kHausdorff},
      {"all", ffm::kAllMetrics}, {"nontubular", ffm::kNonTubular}};
  unsigned mask = 0;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto it = names.find(item);
    if (it == names.end()) throw CLI::ValidationError("--metrics", "unknown metric '" + item + "'");
    mask |= it->second;
  }
  if (mask == 0) throw CLI::ValidationError("--metrics", "empty metric list");
  return mask;
}

void add_ffm_flags(CLI::App* cmd, ffm::cli::JobConfig& cfg, bool& robust) {
  cmd->add_option("--window", cfg.params.window, "sliding window side (odd, >= 3)")->capture_default_str();
  cmd->add_option("--step", cfg.params.step, "sampling step in pixels")->capture_default_str();
  cmd->add_option("--gray-levels", cfg.params.gray_levels, "gray levels L")->capture_default_str();
  cmd->add_flag("--robust", robust, "mean +/- standard deviation box counting");
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractal feature maps, segmentation ground truth and evaluation"};
  app.require_subcommand(1);

  ffm::cli::JobConfig cfg;
  bool robust = false;
  std::string betti = "sum";
  std::string metrics = "all";

  auto* ffm_cmd = app.add_subcommand("ffm", "image fractal feature maps (.ffm, optional 16-bit PNG)");
  ffm_cmd->add_option("inputs", cfg.inputs, "images, directories or globs")->required();
  ffm_cmd->add_option("--out", cfg.out, "output directory")->required();
  ffm_cmd->add_flag("--png16", cfg.png16, "also write a 16-bit PNG rendering");
  add_ffm_flags(ffm_cmd, cfg, robust);

  auto* weights_cmd = app.add_subcommand("weights", "label FFM loss weights");
  weights_cmd->add_option("inputs", cfg.inputs, "label masks (0/255)")->required();
  weights_cmd->add_option("--out", cfg.out, "output directory")->required();
  weights_cmd->add_flag("--png16", cfg.png16, "also write a 16-bit PNG rendering");
  add_ffm_flags(weights_cmd, cfg, robust);

  auto* extract_cmd = app.add_subcommand("extract", "edge and skeleton masks from labels");
  extract_cmd->add_option("inputs", cfg.inputs, "label masks (0/255)")->required();
  extract_cmd->add_option("--out", cfg.out, "output directory")->required();
  extract_cmd->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");

  auto* fd_cmd = app.add_subcommand("fd", "whole-image fractal dimension table");
  fd_cmd->add_option("inputs", cfg.inputs, "images, directories or globs")->required();
  fd_cmd->add_option("--scales", cfg.fd_scales, "box sizes, e.g. --scales 2 4 8")->delimiter(',');
  fd_cmd->add_option("--gray-levels", cfg.params.gray_levels, "gray levels L")->capture_default_str();
  fd_cmd->add_flag("--robust", robust, "mean +/- standard deviation box counting");

  auto* eval_cmd = app.add_subcommand("eval", "segmentation metrics per image plus mean");
  eval_cmd->add_option("inputs", cfg.inputs, "probability maps (.ffm or 8-bit images)")->required();
  eval_cmd->add_option("--gt", cfg.gt_inputs, "ground-truth masks, paired by file stem")->required();
  eval_cmd->add_option("--out", cfg.out, "directory for metrics.jsonl (default: stdout)");
  eval_cmd->add_option("--threshold", cfg.eval.threshold, "binarization threshold")->capture_default_str();
  eval_cmd->add_option("--betti", betti, "Betti error mode")->check(CLI::IsMember({"sum", "b1"}))->capture_default_str();
  eval_cmd->add_option("--betti-patch", cfg.eval.betti_patch, "mean Betti error over square patches of this side");
  eval_cmd->add_option("--metrics", metrics, "comma list: iou,acc,auc,cldice,betti,hd,all,nontubular")
      ->capture_default_str();
  eval_cmd->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");

  auto* bench_cmd = app.add_subcommand("bench", "time compute_ffm on a seeded random image");
  bench_cmd->add_option("--size", cfg.bench_size, "image side (>= 64)")->capture_default_str();
  bench_cmd->add_option("--repetitions", cfg.repetitions, "timed runs")->capture_default_str();
  add_ffm_flags(bench_cmd, cfg, robust);

  try {
    app.parse(argc, argv);
    cfg.eval.metrics = parse_metrics(metrics);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  cfg.params.mode = robust ? ffm::BoxMode::Robust : ffm::BoxMode::Standard;
  cfg.eval.betti_mode = betti == "b1" ? ffm::BettiMode::B1Only : ffm::BettiMode::Sum;

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*ffm_cmd) return ffm::cli::cmd_ffm(cfg, out, err);
  if (*weights_cmd) return ffm::cli::cmd_weights(cfg, out, err);
  if (*extract_cmd) return ffm::cli::cmd_extract(cfg, out, err);
  if (*fd_cmd) return ffm::cli::cmd_fd(cfg, out, err);
  if (*eval_cmd) return ffm::cli::cmd_eval(cfg, out, err);
  if (*bench_cmd) return ffm::cli::cmd_bench(cfg, out, err);
  return 2;
}
