#pragma once

// Pixel-level fractal feature maps: the box-counting FD of a w x w window
// centred on every pixel (sampled every `step` pixels), min-max normalized.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "ffm/fd.hpp"
#include "ffm/grid.hpp"

namespace ffm {

struct FfmParams {
  int window = 5;
  int step = 1;
  unsigned gray_levels = 256;
  BoxMode mode = BoxMode::Standard;
  std::vector<int> scales;  // empty: ScaleConfig::defaults_for(window)

  void validate() const {
    if (window < 3 || window % 2 == 0)
      throw Error(ErrorCode::InvalidArgument, "window must be odd and >= 3, got " + std::to_string(window));
    if (step < 1 || step > window)
      throw Error(ErrorCode::InvalidArgument, "step must lie in [1, window], got " + std::to_string(step));
    if (gray_levels < 2 || gray_levels > 65536)
      throw Error(ErrorCode::InvalidArgument, "gray_levels must lie in [2, 65536]");
    const ScaleConfig cfg = scale_config();
    cfg.validate();
    if (cfg.scales.back() > window)
      throw Error(ErrorCode::InvalidScale, "scale exceeds window size");
  }

  ScaleConfig scale_config() const {
    if (scales.empty()) return ScaleConfig::defaults_for(static_cast<std::size_t>(window), mode);
    return ScaleConfig{scales, mode};
  }
};

/// Edge-replicating pad by p pixels on every side.
inline GrayImage pad(const GrayImage& image, std::size_t p) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "pad: empty image");
  const std::size_t w = image.width(), h = image.height();
  std::vector<std::uint16_t> out((w + 2 * p) * (h + 2 * p));
  std::size_t i = 0;
  for (std::size_t r = 0; r < h + 2 * p; ++r) {
    const std::size_t sr = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r) - p, 0, h - 1);
    for (std::size_t c = 0; c < w + 2 * p; ++c) {
      const std::size_t sc = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(c) - p, 0, w - 1);
      out[i++] = image(sr, sc);
    }
  }
  return GrayImage(w + 2 * p, h + 2 * p, std::move(out), image.gray_levels());
}

namespace detail {

// Per-scale lookup tables for the sliding-window path. The standard-mode box
// index of every gray level is tabulated once per call instead of once per grid.
struct ScaleTable {
  int k = 0;
  std::uint64_t denom = 0;
  double log_x = 0;
  std::vector<std::uint32_t> index;
};

class WindowEstimator {
 public:
  WindowEstimator(const FfmParams& params, std::size_t window)
      : side_(window), gray_levels_(params.gray_levels), mode_(params.mode) {
    for (int k : params.scale_config().scales) {
      ScaleTable t;
      t.k = k;
      t.denom = static_cast<std::uint64_t>(gray_levels_ - 1) * k;
      t.log_x = std::log(static_cast<double>(side_) / static_cast<double>(k));
      if (mode_ == BoxMode::Standard) {
        t.index.resize(gray_levels_);
        for (unsigned v = 0; v < gray_levels_; ++v) t.index[v] = box_index(v, side_, t.denom);
      }
      tables_.push_back(std::move(t));
    }
    points_.resize(tables_.size());
  }

  // FD of the side x side window whose top-left corner is `origin`.
  double operator()(const std::uint16_t* origin, std::size_t stride) {
    for (std::size_t s = 0; s < tables_.size(); ++s) {
      const ScaleTable& t = tables_[s];
      const std::uint64_t weighted =
          mode_ == BoxMode::Standard ? count_standard(t, origin, stride) : count_robust(t, origin, stride);
      const auto kk = static_cast<std::uint64_t>(t.k) * static_cast<std::uint64_t>(t.k);
      points_[s] = {t.log_x, std::log(static_cast<double>(weighted) / static_cast<double>(kk))};
    }
    return fd_from_points(points_);
  }

 private:
  std::uint64_t count_standard(const ScaleTable& t, const std::uint16_t* origin, std::size_t stride) const {
    const auto ks = static_cast<std::size_t>(t.k);
    const std::uint32_t* index = t.index.data();
    std::uint64_t weighted = 0;
    for (std::size_t gr = 0; gr < side_; gr += ks) {
      const std::size_t gh = std::min(ks, side_ - gr);
      for (std::size_t gc = 0; gc < side_; gc += ks) {
        const std::size_t gw = std::min(ks, side_ - gc);
        const std::uint16_t* p = origin + gr * stride + gc;
        std::uint16_t lo = *p, hi = *p;
        for (std::size_t r = 0; r < gh; ++r, p += stride)
          for (std::size_t c = 0; c < gw; ++c) {
            lo = std::min(lo, p[c]);
            hi = std::max(hi, p[c]);
          }
        weighted += static_cast<std::uint64_t>(index[hi] - index[lo] + 1) * gh * gw;
      }
    }
    return weighted;
  }

  std::uint64_t count_robust(const ScaleTable& t, const std::uint16_t* origin, std::size_t stride) const {
    const auto ks = static_cast<std::size_t>(t.k);
    std::uint64_t weighted = 0;
    for (std::size_t gr = 0; gr < side_; gr += ks) {
      const std::size_t gh = std::min(ks, side_ - gr);
      for (std::size_t gc = 0; gc < side_; gc += ks) {
        const std::size_t gw = std::min(ks, side_ - gc);
        const std::uint16_t* p = origin + gr * stride + gc;
        std::uint64_t sum = 0, sumsq = 0;
        for (std::size_t r = 0; r < gh; ++r, p += stride)
          for (std::size_t c = 0; c < gw; ++c) {
            const std::uint64_t v = p[c];
            sum += v;
            sumsq += v * v;
          }
        weighted += robust_span(gh * gw, sum, sumsq, gray_levels_, side_, t.denom) * gh * gw;
      }
    }
    return weighted;
  }

  std::size_t side_;
  unsigned gray_levels_;
  BoxMode mode_;
  std::vector<ScaleTable> tables_;
  std::vector<FitPoint> points_;
};

// Nearest sampled coordinate along one axis; ties go to the lower index.
inline std::size_t nearest_sample(std::size_t i, std::size_t step, std::size_t extent) {
  const std::size_t below = i / step * step;
  const std::size_t above = below + step;
  if (above < extent && above - i < i - below) return above;
  return below;
}

inline unsigned resolve_threads(unsigned threads) {
  if (threads != 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace detail

/// Raw (unnormalized) FFM. Output has the input's dimensions. With step > 1
/// only every step-th row and column is estimated; the remaining pixels copy
/// the nearest estimated pixel. `threads` = 0 uses all hardware threads; the
/// result does not depend on the thread count.
inline FloatMap compute_ffm_raw(const GrayImage& image, const FfmParams& params, unsigned threads = 0) {
  params.validate();
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "compute_ffm: empty image");
  for (auto v : image.values())
    if (v >= params.gray_levels)
      throw Error(ErrorCode::OutOfRange, "gray value " + std::to_string(v) + " >= gray_levels");

  const auto w = static_cast<std::size_t>(params.window);
  const auto step = static_cast<std::size_t>(params.step);
  const std::size_t p = w / 2;
  const GrayImage padded = pad(image, p);
  const std::size_t width = image.width(), height = image.height();
  const std::size_t stride = padded.width();
  const std::uint16_t* base = padded.values().data();

  FloatMap out(width, height);
  const std::size_t sampled_rows = (height + step - 1) / step;
  const unsigned nthreads =
      static_cast<unsigned>(std::min<std::size_t>(detail::resolve_threads(threads), sampled_rows));

  // Each worker owns a contiguous band of sampled rows.
  auto run_band = [&](std::size_t first, std::size_t last) {
    detail::WindowEstimator estimate(params, w);
    for (std::size_t sr = first; sr < last; ++sr) {
      const std::size_t i = sr * step;
      for (std::size_t j = 0; j < width; j += step)
        out(i, j) = static_cast<float>(estimate(base + i * stride + j, stride));
    }
  };

  if (nthreads <= 1) {
    run_band(0, sampled_rows);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
      const std::size_t first = sampled_rows * t / nthreads;
      const std::size_t last = sampled_rows * (t + 1) / nthreads;
      workers.emplace_back(run_band, first, last);
    }
  }

  if (step > 1) {
    std::vector<std::size_t> col_src(width);
    for (std::size_t j = 0; j < width; ++j) col_src[j] = detail::nearest_sample(j, step, width);
    for (std::size_t i = 0; i < height; ++i) {
      const std::size_t si = detail::nearest_sample(i, step, height);
      for (std::size_t j = 0; j < width; ++j)
        if (si != i || col_src[j] != j) out(i, j) = out(si, col_src[j]);
    }
  }
  return out;
}

/// Min-max rescale to [0, 1]; a constant map becomes all 1.0.
inline FloatMap normalize(const FloatMap& map) {
  if (map.empty()) throw Error(ErrorCode::InvalidArgument, "normalize: empty map");
  const auto [lo_it, hi_it] = std::minmax_element(map.begin(), map.end());
  const double lo = *lo_it, hi = *hi_it;
  FloatMap out(map.width(), map.height(), 1.0f);
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < map.size(); ++i)
    out[i] = static_cast<float>((static_cast<double>(map[i]) - lo) / range);
  return out;
}

inline FloatMap compute_ffm(const GrayImage& image, const FfmParams& params, unsigned threads = 0) {
  return normalize(compute_ffm_raw(image, params, threads));
}

/// Label FFM used as pixel weights: foreground maps to gray L - 1.
inline FloatMap compute_ffm_label(const BinaryMask& mask, const FfmParams& params, unsigned threads = 0) {
  std::vector<std::uint16_t> gray(mask.size());
  const auto top = static_cast<std::uint16_t>(params.gray_levels - 1);
  for (std::size_t i = 0; i < mask.size(); ++i) gray[i] = mask[i] ? top : 0;
  return compute_ffm(GrayImage(mask.width(), mask.height(), std::move(gray), params.gray_levels), params,
                     threads);
}

}  // namespace ffm
