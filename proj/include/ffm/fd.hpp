#pragma once

// Box-counting fractal dimension of a grayscale intensity surface.
//
// The image is treated as a 3-D volume (x, y, gray). For a scale k the plane
// is cut into k x k grids and the gray axis into boxes of height
// h = (L - 1) * k / M, M being the (smaller) region side. Each grid needs
// l - m + 1 boxes to cover its gray range, where m and l are the 1-based box
// indices of the grid's minimum and maximum. The FD is the least-squares slope
// of log N_r against log(1/r), r = k / M.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffm/grid.hpp"

namespace ffm {

enum class BoxMode { Standard, Robust };

/// Box side lengths used for one FD estimate.
struct ScaleConfig {
  std::vector<int> scales;
  BoxMode mode = BoxMode::Standard;

  void validate() const {
    if (scales.empty()) throw Error(ErrorCode::InvalidScale, "scale set is empty");
    for (std::size_t i = 0; i < scales.size(); ++i) {
      if (scales[i] < 2)
        throw Error(ErrorCode::InvalidScale, "scale " + std::to_string(scales[i]) + " < 2");
      if (i > 0 && scales[i] <= scales[i - 1])
        throw Error(ErrorCode::InvalidScale, "scales must be strictly increasing");
    }
  }

  /// k = 2, 3, ..., max(3, side / 2), capped at the region side.
  static ScaleConfig defaults_for(std::size_t side, BoxMode mode = BoxMode::Standard) {
    if (side < 2) throw Error(ErrorCode::InvalidScale, "region side must be at least 2");
    const int upper = static_cast<int>(std::min<std::size_t>(side, std::max<std::size_t>(3, side / 2)));
    ScaleConfig cfg;
    cfg.mode = mode;
    for (int k = 2; k <= upper; ++k) cfg.scales.push_back(k);
    return cfg;
  }
};

struct FitPoint {
  double x = 0;  // log(1/r)
  double y = 0;  // log N_r
};

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

struct FdEstimate {
  double fd = 0;
  std::vector<FitPoint> points;
  double r_squared = 0;
};

/// Non-owning view of a rectangular block of gray values inside a larger buffer.
struct GrayView {
  const std::uint16_t* data = nullptr;
  std::size_t stride = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  static GrayView of(const GrayImage& img) {
    return {img.values().data(), img.width(), img.width(), img.height()};
  }
  GrayView sub(std::size_t row, std::size_t col, std::size_t w, std::size_t h) const {
    return {data + row * stride + col, stride, w, h};
  }
  std::uint16_t operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
  std::size_t side() const { return std::min(width, height); }
};

/// Boxes spanned by the gray range of one grid, for an explicit box height.
/// A gray value of 0 falls in box 1.
inline int box_span(std::span<const std::uint16_t> block, double h) {
  if (block.empty()) throw Error(ErrorCode::InvalidArgument, "box_span: empty block");
  if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "box_span: box height must be positive");
  const auto [lo, hi] = std::minmax_element(block.begin(), block.end());
  const double m = std::max(1.0, std::ceil(*lo / h));
  const double l = std::max(1.0, std::ceil(*hi / h));
  return static_cast<int>(l - m) + 1;
}

namespace detail {

// Box index of an integer gray value, computed exactly as
// max(1, ceil(v / h)) with h = denom / side, denom = (L - 1) * k.
inline std::uint32_t box_index(std::uint32_t v, std::uint64_t side, std::uint64_t denom) {
  const std::uint64_t idx = (v * side + denom - 1) / denom;
  return idx == 0 ? 1u : static_cast<std::uint32_t>(idx);
}

// Same rule for a real-valued gray level (robust mode).
inline double box_index_real(double v, std::uint64_t side, std::uint64_t denom) {
  return std::max(1.0, std::ceil(v * static_cast<double>(side) / static_cast<double>(denom)));
}

// Robust span of one grid from its moments: the gray range is replaced by
// [mean - sd, mean + sd] clamped to [0, L - 1]. Population standard deviation.
inline std::uint64_t robust_span(std::uint64_t n, std::uint64_t sum, std::uint64_t sumsq,
                                 unsigned gray_levels, std::uint64_t side, std::uint64_t denom) {
  const double mean = static_cast<double>(sum) / static_cast<double>(n);
  const std::uint64_t var_num = n * sumsq - sum * sum;
  const double sd = std::sqrt(static_cast<double>(var_num)) / static_cast<double>(n);
  const double top = static_cast<double>(gray_levels - 1);
  const double lo = std::clamp(mean - sd, 0.0, top);
  const double hi = std::clamp(mean + sd, 0.0, top);
  return static_cast<std::uint64_t>(box_index_real(hi, side, denom) - box_index_real(lo, side, denom)) + 1;
}

// FD from fit points: least-squares slope, or log N_r / log(1/r) for a single point.
inline double fd_from_points(std::span<const FitPoint> pts);

}  // namespace detail

/// Ordinary least-squares line through the points.
inline LineFit fit_loglog(std::span<const FitPoint> points) {
  if (points.size() < 2) throw Error(ErrorCode::DegenerateFit, "need at least two points");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : points) {
    const double dx = p.x - mx, dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw Error(ErrorCode::DegenerateFit, "x values coincide");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

inline double detail::fd_from_points(std::span<const FitPoint> pts) {
  if (pts.size() == 1) {
    if (pts[0].x == 0) throw Error(ErrorCode::DegenerateFit, "single scale equals region side");
    return pts[0].y / pts[0].x;
  }
  return fit_loglog(pts).slope;
}

/// N_r for one scale. Boundary grids are truncated to the available pixels
/// and contribute in proportion to their area, so N_r = sum(n_r * area) / k^2.
inline double box_count_at_scale(GrayView region, int k, unsigned gray_levels,
                                 BoxMode mode = BoxMode::Standard) {
  const std::size_t side = region.side();
  if (k < 2 || static_cast<std::size_t>(k) > side)
    throw Error(ErrorCode::InvalidScale,
                "scale " + std::to_string(k) + " outside [2, " + std::to_string(side) + "]");
  const std::uint64_t denom = static_cast<std::uint64_t>(gray_levels - 1) * k;
  const auto ks = static_cast<std::size_t>(k);
  std::uint64_t weighted = 0;
  for (std::size_t gr = 0; gr < region.height; gr += ks) {
    const std::size_t gh = std::min(ks, region.height - gr);
    for (std::size_t gc = 0; gc < region.width; gc += ks) {
      const std::size_t gw = std::min(ks, region.width - gc);
      std::uint64_t span = 0;
      if (mode == BoxMode::Standard) {
        std::uint16_t lo = region(gr, gc), hi = lo;
        for (std::size_t r = gr; r < gr + gh; ++r)
          for (std::size_t c = gc; c < gc + gw; ++c) {
            lo = std::min(lo, region(r, c));
            hi = std::max(hi, region(r, c));
          }
        span = detail::box_index(hi, side, denom) - detail::box_index(lo, side, denom) + 1;
      } else {
        std::uint64_t sum = 0, sumsq = 0;
        for (std::size_t r = gr; r < gr + gh; ++r)
          for (std::size_t c = gc; c < gc + gw; ++c) {
            const std::uint64_t v = region(r, c);
            sum += v;
            sumsq += v * v;
          }
        span = detail::robust_span(gh * gw, sum, sumsq, gray_levels, side, denom);
      }
      weighted += span * gh * gw;
    }
  }
  return static_cast<double>(weighted) / static_cast<double>(ks * ks);
}

inline double box_count_at_scale(const GrayImage& region, int k, BoxMode mode = BoxMode::Standard) {
  return box_count_at_scale(GrayView::of(region), k, region.gray_levels(), mode);
}

inline FdEstimate estimate_fd(GrayView region, const ScaleConfig& config, unsigned gray_levels) {
  config.validate();
  const double side = static_cast<double>(region.side());
  FdEstimate est;
  est.points.reserve(config.scales.size());
  for (int k : config.scales) {
    const double nr = box_count_at_scale(region, k, gray_levels, config.mode);
    est.points.push_back({std::log(side / static_cast<double>(k)), std::log(nr)});
  }
  if (est.points.size() == 1) {
    est.fd = detail::fd_from_points(est.points);
    est.r_squared = 1.0;
  } else {
    const LineFit fit = fit_loglog(est.points);
    est.fd = fit.slope;
    est.r_squared = fit.r_squared;
  }
  return est;
}

inline FdEstimate estimate_fd(const GrayImage& region, const ScaleConfig& config) {
  return estimate_fd(GrayView::of(region), config, region.gray_levels());
}

/// Whole-region estimate with the default scale set.
inline FdEstimate estimate_fd(const GrayImage& region, BoxMode mode = BoxMode::Standard) {
  return estimate_fd(region, ScaleConfig::defaults_for(std::min(region.width(), region.height()), mode));
}

}  // namespace ffm
