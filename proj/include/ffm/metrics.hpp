#pragma once

// Per-image segmentation metrics (IoU, accuracy, ROC AUC, clDice, Betti
// error, Hausdorff distance) and their dataset-level mean.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ffm/grid.hpp"
#include "ffm/topology.hpp"

namespace ffm {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

inline Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "confusion");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i], g = gt[i];
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double iou(const BinaryMask& pred, const BinaryMask& gt) {
  const Confusion c = confusion(pred, gt);
  const std::size_t uni = c.tp + c.fp + c.fn;
  if (uni == 0) throw Error(ErrorCode::UndefinedIoU, "both masks are empty");
  return 100.0 * static_cast<double>(c.tp) / static_cast<double>(uni);
}

inline double acc(const BinaryMask& pred, const BinaryMask& gt) {
  const Confusion c = confusion(pred, gt);
  if (c.total() == 0) throw Error(ErrorCode::InvalidArgument, "empty masks");
  return 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

/// Rank-statistic (Mann-Whitney) ROC AUC with midranks for tied scores.
template <class T>
double auc(const Grid<T>& prob, const BinaryMask& gt) {
  require_same_shape(prob, gt, "auc");
  const std::size_t n = prob.size();
  for (auto v : prob.values())
    if (std::isnan(static_cast<double>(v))) throw Error(ErrorCode::InvalidArgument, "NaN score");
  const std::size_t pos = gt.count();
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0)
    throw Error(ErrorCode::DegenerateClasses, "AUC needs both positive and negative pixels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prob[a] < prob[b]; });
  // twice the rank sum of positives; a tie block [i, j) has midrank (i + j + 1) / 2
  std::uint64_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && prob[order[j]] == prob[order[i]]) ++j;
    std::uint64_t positives = 0;
    for (std::size_t t = i; t < j; ++t) positives += gt[order[t]];
    rank_sum_x2 += positives * (i + j + 1);
    i = j;
  }
  const double u = static_cast<double>(rank_sum_x2) / 2.0 - static_cast<double>(pos) * (pos + 1) / 2.0;
  return 100.0 * u / (static_cast<double>(pos) * static_cast<double>(neg));
}

struct ClDiceParts {
  double precision = 0;    // |skel(pred) & gt| / |skel(pred)|
  double sensitivity = 0;  // |skel(gt) & pred| / |skel(gt)|
  double score = 0;        // percent
};

inline ClDiceParts cl_dice_parts(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "cl_dice");
  if (pred.count() == 0 || gt.count() == 0) throw Error(ErrorCode::EmptyMask, "cl_dice: empty mask");
  const BinaryMask sp = skeletonize(pred), sg = skeletonize(gt);
  const std::size_t np = sp.count(), ng = sg.count();
  if (np == 0 || ng == 0) throw Error(ErrorCode::EmptyMask, "cl_dice: empty skeleton");
  std::size_t hit_p = 0, hit_g = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    hit_p += sp[i] & gt[i];
    hit_g += sg[i] & pred[i];
  }
  ClDiceParts out;
  out.precision = static_cast<double>(hit_p) / static_cast<double>(np);
  out.sensitivity = static_cast<double>(hit_g) / static_cast<double>(ng);
  const double s = out.precision + out.sensitivity;
  out.score = s == 0 ? 0.0 : 100.0 * 2.0 * out.precision * out.sensitivity / s;
  return out;
}

inline double cl_dice(const BinaryMask& pred, const BinaryMask& gt) { return cl_dice_parts(pred, gt).score; }

enum class BettiMode { Sum, B1Only };

inline std::size_t betti_error(const BinaryMask& pred, const BinaryMask& gt, BettiMode mode = BettiMode::Sum) {
  require_same_shape(pred, gt, "betti_error");
  const BettiPair p = betti_numbers(pred), g = betti_numbers(gt);
  const auto diff = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  const std::size_t e1 = diff(p.b1, g.b1);
  return mode == BettiMode::Sum ? diff(p.b0, g.b0) + e1 : e1;
}

namespace detail {

inline BinaryMask crop(const BinaryMask& m, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) {
  BinaryMask out(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) out(r, c) = m(r0 + r, c0 + c);
  return out;
}

}  // namespace detail

/// Mean Betti error over non-overlapping patch x patch tiles (edge tiles truncated).
inline double patch_betti_error(const BinaryMask& pred, const BinaryMask& gt, std::size_t patch,
                                BettiMode mode = BettiMode::Sum) {
  require_same_shape(pred, gt, "betti_error");
  if (patch == 0) throw Error(ErrorCode::InvalidArgument, "patch size must be positive");
  double sum = 0;
  std::size_t tiles = 0;
  for (std::size_t r = 0; r < gt.height(); r += patch)
    for (std::size_t c = 0; c < gt.width(); c += patch) {
      const std::size_t h = std::min(patch, gt.height() - r), w = std::min(patch, gt.width() - c);
      sum += static_cast<double>(betti_error(detail::crop(pred, r, c, h, w), detail::crop(gt, r, c, h, w), mode));
      ++tiles;
    }
  return sum / static_cast<double>(tiles);
}

enum Metric : unsigned {
  kIoU = 1u << 0,
  kAcc = 1u << 1,
  kAuc = 1u << 2,
  kClDice = 1u << 3,
  kBetti = 1u << 4,
  kHausdorff = 1u << 5,
  kAllMetrics = 0x3f,
  // non-tubular protocol: no clDice and no Betti error
  kNonTubular = kIoU | kAcc | kAuc | kHausdorff,
};

struct EvalOptions {
  double threshold = 0.5;
  BettiMode betti_mode = BettiMode::Sum;
  unsigned metrics = kAllMetrics;
  std::size_t betti_patch = 0;  // 0: whole image

  void validate() const {
    if (!(threshold > 0 && threshold < 1))
      throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  }
};

/// Metric values in percent (iou, acc, auc, cl_dice) or pixels (hd). A metric
/// that was not requested, or is undefined for this image, is absent; the
/// reason for an undefined one is kept in `notes`.
struct MetricsReport {
  std::string name;
  std::optional<double> iou, acc, auc, cl_dice, betti_error, hd;
  std::vector<std::pair<std::string, std::string>> notes;
};

/// pred = prob >= threshold
template <class T>
BinaryMask binarize(const Grid<T>& prob, double threshold) {
  BinaryMask out(prob.width(), prob.height());
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = static_cast<double>(prob[i]) >= threshold ? 1 : 0;
  return out;
}

template <class T>
MetricsReport evaluate(const Grid<T>& prob, const BinaryMask& gt, const EvalOptions& opts = {}) {
  opts.validate();
  require_same_shape(prob, gt, "evaluate");
  const BinaryMask pred = binarize(prob, opts.threshold);
  MetricsReport rep;
  auto attempt = [&](unsigned flag, const char* field, std::optional<double>& slot, auto&& fn) {
    if (!(opts.metrics & flag)) return;
    try {
      slot = fn();
    } catch (const Error& e) {
      rep.notes.emplace_back(field, e.what());
    }
  };
  attempt(kIoU, "iou", rep.iou, [&] { return iou(pred, gt); });
  attempt(kAcc, "acc", rep.acc, [&] { return acc(pred, gt); });
  attempt(kAuc, "auc", rep.auc, [&] { return auc(prob, gt); });
  attempt(kClDice, "cl_dice", rep.cl_dice, [&] { return cl_dice(pred, gt); });
  attempt(kBetti, "betti_error", rep.betti_error, [&] {
    return opts.betti_patch ? patch_betti_error(pred, gt, opts.betti_patch, opts.betti_mode)
                            : static_cast<double>(betti_error(pred, gt, opts.betti_mode));
  });
  attempt(kHausdorff, "hd", rep.hd, [&] { return hausdorff(pred, gt); });
  return rep;
}

/// Arithmetic mean of each metric over the images where it is present.
struct MetricsSummary {
  MetricsReport mean;
  std::size_t images = 0;
  std::size_t iou_n = 0, acc_n = 0, auc_n = 0, cl_dice_n = 0, betti_n = 0, hd_n = 0;
};

inline MetricsSummary aggregate(const std::vector<MetricsReport>& reports) {
  MetricsSummary s;
  s.images = reports.size();
  s.mean.name = "mean";
  auto average = [&](auto member, std::size_t& count) -> std::optional<double> {
    double sum = 0;
    count = 0;
    for (const auto& r : reports)
      if (const auto& v = r.*member) {
        sum += *v;
        ++count;
      }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  s.mean.iou = average(&MetricsReport::iou, s.iou_n);
  s.mean.acc = average(&MetricsReport::acc, s.acc_n);
  s.mean.auc = average(&MetricsReport::auc, s.auc_n);
  s.mean.cl_dice = average(&MetricsReport::cl_dice, s.cl_dice_n);
  s.mean.betti_error = average(&MetricsReport::betti_error, s.betti_n);
  s.mean.hd = average(&MetricsReport::hd, s.hd_n);
  return s;
}

}  // namespace ffm
