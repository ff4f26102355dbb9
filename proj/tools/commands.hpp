#pragma once

// Batch subcommands behind the ffm command-line tool. Each returns the process
// exit code: 0 when every input succeeded, 1 when some input failed, 2 when
// the configuration was rejected before any output was written.

#include <fnmatch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ffm/toolkit.hpp"
#include "json.hpp"

namespace ffm::cli {

namespace fs = std::filesystem;

struct JobConfig {
  std::vector<std::string> inputs;
  std::vector<std::string> gt_inputs;  // eval only
  fs::path out;
  FfmParams params;
  unsigned threads = 0;
  EvalOptions eval;
  bool png16 = false;
  std::vector<int> fd_scales;  // fd only; empty uses the default set
  std::size_t bench_size = 256;
  int repetitions = 5;
};

inline bool has_image_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ffm";
}

/// Expands directories (their image files) and shell-style wildcards in the
/// file-name part. Literal paths are kept even when missing so the failure is
/// reported per file.
inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& arg : args) {
    const fs::path p(arg);
    std::vector<fs::path> found;
    if (arg.find_first_of("*?[") != std::string::npos) {
      const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      const std::string pattern = p.filename().string();
      std::error_code ec;
      for (const auto& e : fs::directory_iterator(dir, ec))
        if (e.is_regular_file() && fnmatch(pattern.c_str(), e.path().filename().c_str(), 0) == 0)
          found.push_back(e.path());
    } else if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && has_image_extension(e.path())) found.push_back(e.path());
    } else {
      found.push_back(p);
    }
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

namespace detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers; fn must only touch slot i.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(ffm::detail::resolve_threads(threads), n));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) fn(i);
    });
}

inline bool validate(const JobConfig& cfg, std::ostream& err, bool needs_out) {
  try {
    cfg.params.validate();
    cfg.eval.validate();
    if (!cfg.fd_scales.empty()) ScaleConfig{cfg.fd_scales, cfg.params.mode}.validate();
    if (needs_out) fs::create_directories(cfg.out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return false;
  }
  return true;
}

inline void report_failures(const std::vector<std::string>& failures, std::ostream& err) {
  if (failures.empty()) return;
  err << failures.size() << " input(s) failed:\n";
  for (const auto& f : failures) err << "  " << f << "\n";
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string fixed(const std::optional<double>& v, int prec) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << *v;
  return os.str();
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["image"] = r.name;
  j["iou"] = detail::optional_json(r.iou);
  j["acc"] = detail::optional_json(r.acc);
  j["auc"] = detail::optional_json(r.auc);
  j["cl_dice"] = detail::optional_json(r.cl_dice);
  j["betti_error"] = detail::optional_json(r.betti_error);
  j["hd"] = detail::optional_json(r.hd);
  if (!r.notes.empty()) {
    nlohmann::ordered_json notes = nlohmann::ordered_json::object();
    for (const auto& [field, why] : r.notes) notes[field] = why;
    j["notes"] = notes;
  }
  return j;
}

inline nlohmann::ordered_json summary_json(const MetricsSummary& s) {
  auto j = report_json(s.mean);
  j["images"] = s.images;
  j["counts"] = {{"iou", s.iou_n}, {"acc", s.acc_n},     {"auc", s.auc_n},
                 {"cl_dice", s.cl_dice_n}, {"betti_error", s.betti_n}, {"hd", s.hd_n}};
  return j;
}

/// Per-file image FFM; writes <stem>.ffm and, with --png16, <stem>.png.
inline int cmd_ffm(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!detail::validate(cfg, err, true)) return 2;
  std::vector<std::string> failures;
  for (const auto& path : expand_inputs(cfg.inputs)) {
    try {
      const FloatMap map = compute_ffm(io::read_image(path), cfg.params, cfg.threads);
      const fs::path dst = cfg.out / (path.stem().string() + ".ffm");
      io::write_ffm(map, dst);
      if (cfg.png16) io::export_png16(map, cfg.out / (path.stem().string() + ".png"));
      out << path.string() << " -> " << dst.string() << "\n";
    } catch (const std::exception& e) {
      failures.push_back(path.string() + ": " + e.what());
    }
  }
  detail::report_failures(failures, err);
  return failures.empty() ? 0 : 1;
}

/// Per-label FFM loss weights; writes <stem>.weights.ffm (and .weights.png).
inline int cmd_weights(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!detail::validate(cfg, err, true)) return 2;
  std::vector<std::string> failures;
  for (const auto& path : expand_inputs(cfg.inputs)) {
    try {
      const FloatMap map = compute_ffm_label(io::read_mask(path), cfg.params, cfg.threads);
      const fs::path dst = cfg.out / (path.stem().string() + ".weights.ffm");
      io::write_ffm(map, dst);
      if (cfg.png16) io::export_png16(map, cfg.out / (path.stem().string() + ".weights.png"));
      out << path.string() << " -> " << dst.string() << "\n";
    } catch (const std::exception& e) {
      failures.push_back(path.string() + ": " + e.what());
    }
  }
  detail::report_failures(failures, err);
  return failures.empty() ? 0 : 1;
}

/// Edge and skeleton ground truth per label: <stem>_edge.png, <stem>_skeleton.png.
inline int cmd_extract(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!detail::validate(cfg, err, true)) return 2;
  const auto paths = expand_inputs(cfg.inputs);
  std::vector<std::string> errors(paths.size());
  detail::parallel_for(paths.size(), cfg.threads, [&](std::size_t i) {
    try {
      const BinaryMask mask = io::read_mask(paths[i]);
      const std::string stem = paths[i].stem().string();
      io::write_mask_png(extract_edges(mask), cfg.out / (stem + "_edge.png"));
      io::write_mask_png(skeletonize(mask), cfg.out / (stem + "_skeleton.png"));
    } catch (const std::exception& e) {
      errors[i] = paths[i].string() + ": " + e.what();
    }
  });
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (errors[i].empty())
      out << paths[i].string() << " -> " << (cfg.out / (paths[i].stem().string() + "_{edge,skeleton}.png")).string()
          << "\n";
    else
      failures.push_back(errors[i]);
  }
  detail::report_failures(failures, err);
  return failures.empty() ? 0 : 1;
}

/// Whole-image FD table: file, fd, r^2, scale count.
inline int cmd_fd(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!detail::validate(cfg, err, false)) return 2;
  std::vector<std::string> failures;
  out << std::left << std::setw(40) << "file" << std::right << std::setw(12) << "fd" << std::setw(12) << "r2"
      << std::setw(8) << "scales" << "\n";
  for (const auto& path : expand_inputs(cfg.inputs)) {
    try {
      const GrayImage img = io::read_image(path);
      const ScaleConfig sc = cfg.fd_scales.empty()
                                 ? ScaleConfig::defaults_for(std::min(img.width(), img.height()), cfg.params.mode)
                                 : ScaleConfig{cfg.fd_scales, cfg.params.mode};
      const FdEstimate est = estimate_fd(GrayView::of(img), sc, cfg.params.gray_levels);
      out << std::left << std::setw(40) << path.filename().string() << std::right << std::fixed
          << std::setprecision(6) << std::setw(12) << est.fd << std::setw(12) << est.r_squared << std::setw(8)
          << sc.scales.size() << "\n";
    } catch (const std::exception& e) {
      failures.push_back(path.string() + ": " + e.what());
    }
  }
  detail::report_failures(failures, err);
  return failures.empty() ? 0 : 1;
}

/// Probability map from a .ffm file (values in [0, 1]) or an 8-bit image (v / 255).
inline FloatMap read_probability(const fs::path& path) {
  if (path.extension() == ".ffm") {
    FloatMap m = io::read_ffm(path);
    for (float v : m.values())
      if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::OutOfRange, "probabilities must lie in [0, 1]");
    return m;
  }
  const GrayImage img = io::read_image(path);
  FloatMap m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = static_cast<float>(img[i] / 255.0);
  return m;
}

/// Pairs predictions with ground truth by file stem. One JSON record per
/// image in input order, then a mean record.
inline int cmd_eval(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!detail::validate(cfg, err, !cfg.out.empty())) return 2;
  const auto preds = expand_inputs(cfg.inputs);
  const auto gts = expand_inputs(cfg.gt_inputs);
  std::map<std::string, fs::path> gt_by_stem;
  std::vector<std::string> mismatches;
  for (const auto& g : gts)
    if (!gt_by_stem.emplace(g.stem().string(), g).second) mismatches.push_back("duplicate ground truth stem: " + g.string());
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& p : preds) {
    auto it = gt_by_stem.find(p.stem().string());
    if (it == gt_by_stem.end()) {
      mismatches.push_back("no ground truth for " + p.string());
    } else {
      pairs.emplace_back(p, it->second);
      gt_by_stem.erase(it);
    }
  }
  for (const auto& [stem, g] : gt_by_stem) mismatches.push_back("no prediction for " + g.string());
  if (pairs.empty() && mismatches.empty()) mismatches.push_back("no inputs");
  if (!mismatches.empty()) {
    for (const auto& m : mismatches) err << "error: " << m << "\n";
    return 2;
  }

  std::vector<MetricsReport> reports(pairs.size());
  std::vector<std::string> errors(pairs.size());
  detail::parallel_for(pairs.size(), cfg.threads, [&](std::size_t i) {
    try {
      reports[i] = evaluate(read_probability(pairs[i].first), io::read_mask(pairs[i].second), cfg.eval);
      reports[i].name = pairs[i].first.filename().string();
    } catch (const std::exception& e) {
      errors[i] = pairs[i].first.string() + ": " + e.what();
    }
  });

  std::vector<MetricsReport> done;
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (errors[i].empty()) done.push_back(reports[i]);
    else failures.push_back(errors[i]);
  }
  const MetricsSummary summary = aggregate(done);

  std::ostringstream lines;
  for (const auto& r : done) lines << report_json(r).dump() << "\n";
  lines << summary_json(summary).dump() << "\n";

  std::ostringstream table;
  table << std::left << std::setw(32) << "image" << std::right;
  for (const char* h : {"IoU", "ACC", "AUC", "clDice", "BettiErr", "HD"}) table << std::setw(10) << h;
  table << "\n";
  auto row = [&](const MetricsReport& r) {
    table << std::left << std::setw(32) << r.name << std::right << std::setw(10) << detail::fixed(r.iou, 2)
          << std::setw(10) << detail::fixed(r.acc, 2) << std::setw(10) << detail::fixed(r.auc, 2) << std::setw(10)
          << detail::fixed(r.cl_dice, 2) << std::setw(10) << detail::fixed(r.betti_error, 3) << std::setw(10)
          << detail::fixed(r.hd, 3) << "\n";
  };
  for (const auto& r : done) row(r);
  row(summary.mean);

  if (cfg.out.empty()) {
    out << lines.str();
    err << table.str();
  } else {
    std::ofstream f(cfg.out / "metrics.jsonl", std::ios::trunc);
    f << lines.str();
    if (!f) failures.push_back("cannot write " + (cfg.out / "metrics.jsonl").string());
    out << table.str();
  }
  detail::report_failures(failures, err);
  return failures.empty() ? 0 : 1;
}

struct BenchReport {
  std::size_t size = 0;
  FfmParams params;
  unsigned threads = 0;
  std::vector<double> samples_ms;
  double median_ms = 0;
  double megapixels_per_s = 0;
  int compare_step = 0;        // step used for the scaling comparison
  double compare_median_ms = 0;
  double step_exponent = 0;    // t(S) ~ S^-exponent; ideal 2
};

inline GrayImage bench_image(std::size_t size, unsigned gray_levels, std::uint32_t seed = 20240501) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<unsigned> dist(0, gray_levels - 1);
  std::vector<std::uint16_t> px(size * size);
  for (auto& v : px) v = static_cast<std::uint16_t>(dist(rng));
  return GrayImage(size, size, std::move(px), gray_levels);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Wall time of compute_ffm, one sample per repetition.
inline std::vector<double> time_ffm(const GrayImage& img, const FfmParams& params, unsigned threads, int reps) {
  std::vector<double> samples;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const FloatMap m = compute_ffm(img, params, threads);
    const auto t1 = std::chrono::steady_clock::now();
    if (m.empty()) throw Error(ErrorCode::InvalidArgument, "empty result");
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return samples;
}

inline BenchReport run_bench(std::size_t size, const FfmParams& params, int reps, unsigned threads) {
  if (size < 64) throw Error(ErrorCode::InvalidArgument, "bench size must be at least 64");
  if (reps < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be at least 1");
  params.validate();
  BenchReport rep;
  rep.size = size;
  rep.params = params;
  rep.threads = ffm::detail::resolve_threads(threads);
  const GrayImage img = bench_image(size, params.gray_levels);
  rep.samples_ms = time_ffm(img, params, threads, reps);
  rep.median_ms = median(rep.samples_ms);
  rep.megapixels_per_s = static_cast<double>(size * size) / (rep.median_ms * 1e3);

  FfmParams other = params;
  other.step = params.step == 1 ? std::min(2, params.window) : 1;
  rep.compare_step = other.step;
  rep.compare_median_ms = median(time_ffm(img, other, threads, reps));
  const double t_small = params.step == 1 ? rep.median_ms : rep.compare_median_ms;
  const double t_large = params.step == 1 ? rep.compare_median_ms : rep.median_ms;
  const double s_large = std::max(params.step, other.step);
  rep.step_exponent = std::log(t_small / t_large) / std::log(s_large);
  return rep;
}

inline int cmd_bench(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!detail::validate(cfg, err, false)) return 2;
  BenchReport rep;
  try {
    rep = run_bench(cfg.bench_size, cfg.params, cfg.repetitions, cfg.threads);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  out << std::fixed << std::setprecision(3);
  out << "image      " << rep.size << "x" << rep.size << " (seeded pseudo-random)\n";
  out << "window     " << rep.params.window << "  step " << rep.params.step << "  gray levels "
      << rep.params.gray_levels << (rep.params.mode == BoxMode::Robust ? "  robust" : "") << "\n";
  out << "threads    " << rep.threads << "\n";
  out << "samples_ms";
  for (double s : rep.samples_ms) out << " " << s;
  out << "\nmedian_ms  " << rep.median_ms << "\n";
  out << "throughput " << rep.megapixels_per_s << " Mpx/s\n";
  out << "step " << rep.compare_step << " median_ms " << rep.compare_median_ms << "\n";
  out << "step scaling exponent " << rep.step_exponent << " (ideal 2)\n";
  return 0;
}

}  // namespace ffm::cli
