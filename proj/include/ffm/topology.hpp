#pragma once

// Binary-mask topology: boundaries, thinning, component labeling, Betti
// numbers, exact Euclidean distance transform and Hausdorff distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ffm/grid.hpp"

namespace ffm {

/// Foreground pixels with a background 4-neighbour. Outside the image counts as background.
inline BinaryMask extract_edges(const BinaryMask& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  BinaryMask edges(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      const bool boundary = r == 0 || c == 0 || r + 1 == h || c + 1 == w || !mask(r - 1, c) ||
                            !mask(r + 1, c) || !mask(r, c - 1) || !mask(r, c + 1);
      edges(r, c) = boundary ? 1 : 0;
    }
  return edges;
}

/// Zhang-Suen thinning iterated until no pixel changes.
inline BinaryMask skeletonize(const BinaryMask& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  // one-pixel background frame so every pixel has eight neighbours
  const std::size_t pw = w + 2;
  std::vector<std::uint8_t> img(pw * (h + 2), 0);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img[(r + 1) * pw + c + 1] = mask(r, c);

  std::vector<std::size_t> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (std::size_t r = 1; r <= h; ++r)
        for (std::size_t c = 1; c <= w; ++c) {
          const std::size_t i = r * pw + c;
          if (!img[i]) continue;
          // p2 .. p9 clockwise from north
          const int p2 = img[i - pw], p3 = img[i - pw + 1], p4 = img[i + 1], p5 = img[i + pw + 1];
          const int p6 = img[i + pw], p7 = img[i + pw - 1], p8 = img[i - 1], p9 = img[i - pw - 1];
          const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (b < 2 || b > 6) continue;
          const int a = (!p2 && p3) + (!p3 && p4) + (!p4 && p5) + (!p5 && p6) + (!p6 && p7) +
                        (!p7 && p8) + (!p8 && p9) + (!p9 && p2);
          if (a != 1) continue;
          const bool ok = pass == 0 ? (p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0)
                                    : (p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0);
          if (ok) doomed.push_back(i);
        }
      for (auto i : doomed) img[i] = 0;
      changed = changed || !doomed.empty();
    }
  }

  BinaryMask out(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) out(r, c) = img[(r + 1) * pw + c + 1];
  return out;
}

struct Components {
  std::size_t count = 0;
  Grid<std::int32_t> labels;  // 0 = background, 1..count in raster discovery order
};

inline Components connected_components(const BinaryMask& mask, int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8)
    throw Error(ErrorCode::InvalidArgument, "connectivity must be 4 or 8");
  const auto w = static_cast<std::ptrdiff_t>(mask.width());
  const auto h = static_cast<std::ptrdiff_t>(mask.height());
  Components out{0, Grid<std::int32_t>(mask.width(), mask.height(), 0)};
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> stack;
  for (std::ptrdiff_t r = 0; r < h; ++r)
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      if (!mask(r, c) || out.labels(r, c)) continue;
      const auto label = static_cast<std::int32_t>(++out.count);
      out.labels(r, c) = label;
      stack.assign(1, {r, c});
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        for (std::ptrdiff_t dy = -1; dy <= 1; ++dy)
          for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
            if ((dy == 0 && dx == 0) || (connectivity == 4 && dy != 0 && dx != 0)) continue;
            const std::ptrdiff_t ny = y + dy, nx = x + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (!mask(ny, nx) || out.labels(ny, nx)) continue;
            out.labels(ny, nx) = label;
            stack.emplace_back(ny, nx);
          }
      }
    }
  return out;
}

struct BettiPair {
  std::size_t b0 = 0;
  std::size_t b1 = 0;
  friend bool operator==(const BettiPair&, const BettiPair&) = default;
};

/// b0: 8-connected foreground components. b1: 4-connected background
/// components of the mask framed by one background ring, minus the outer one.
inline BettiPair betti_numbers(const BinaryMask& mask) {
  BettiPair out;
  out.b0 = connected_components(mask, 8).count;
  BinaryMask background(mask.width() + 2, mask.height() + 2, 1);
  for (std::size_t r = 0; r < mask.height(); ++r)
    for (std::size_t c = 0; c < mask.width(); ++c) background(r + 1, c + 1) = mask(r, c) ? 0 : 1;
  out.b1 = connected_components(background, 4).count - 1;
  return out;
}

namespace detail {

constexpr double kFar = 1e300;

// Lower envelope of parabolas (q - x)^2 + f[x] over the finite entries of f.
inline void squared_distance_1d(const std::vector<double>& f, std::vector<double>& d,
                                std::vector<std::ptrdiff_t>& v, std::vector<double>& z) {
  const auto n = static_cast<std::ptrdiff_t>(f.size());
  std::ptrdiff_t k = -1;
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    if (f[q] >= kFar) continue;
    const double fq = f[q] + static_cast<double>(q * q);
    while (k >= 0) {
      const std::ptrdiff_t p = v[k];
      const double s = (fq - (f[p] + static_cast<double>(p * p))) / static_cast<double>(2 * (q - p));
      if (s > z[k]) {
        ++k;
        v[k] = q;
        z[k] = s;
        break;
      }
      --k;
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
    }
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kFar);
    return;
  }
  std::ptrdiff_t j = 0;
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    while (j < k && z[j + 1] < static_cast<double>(q)) ++j;
    const double dx = static_cast<double>(q - v[j]);
    d[q] = dx * dx + f[v[j]];
  }
}

}  // namespace detail

/// Exact Euclidean distance from every pixel to the nearest foreground pixel.
/// An all-background mask yields +infinity everywhere.
inline DoubleMap distance_transform(const BinaryMask& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  const double inf = std::numeric_limits<double>::infinity();
  DoubleMap out(w, h, inf);
  if (mask.count() == 0) return out;

  // columns: squared vertical distance to the nearest foreground pixel
  DoubleMap g(w, h, detail::kFar);
  for (std::size_t c = 0; c < w; ++c) {
    std::ptrdiff_t last = -1;
    for (std::size_t r = 0; r < h; ++r) {
      if (mask(r, c)) last = static_cast<std::ptrdiff_t>(r);
      if (last >= 0) g(r, c) = static_cast<double>(static_cast<std::ptrdiff_t>(r) - last);
    }
    last = -1;
    for (std::size_t r = h; r-- > 0;) {
      if (mask(r, c)) last = static_cast<std::ptrdiff_t>(r);
      if (last >= 0) g(r, c) = std::min(g(r, c), static_cast<double>(last - static_cast<std::ptrdiff_t>(r)));
    }
    for (std::size_t r = 0; r < h; ++r)
      if (g(r, c) < detail::kFar) g(r, c) *= g(r, c);
  }

  std::vector<double> f(w), d(w), z(w + 1);
  std::vector<std::ptrdiff_t> v(w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) f[c] = g(r, c);
    detail::squared_distance_1d(f, d, v, z);
    for (std::size_t c = 0; c < w; ++c) out(r, c) = d[c] >= detail::kFar ? inf : std::sqrt(d[c]);
  }
  return out;
}

/// Symmetric Hausdorff distance between the foreground sets, in pixels.
inline double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "hausdorff");
  const bool a_empty = a.count() == 0, b_empty = b.count() == 0;
  if (a_empty && b_empty) return 0.0;
  if (a_empty || b_empty)
    throw Error(ErrorCode::EmptySetDistance, "hausdorff distance to an empty set is undefined");
  const DoubleMap to_a = distance_transform(a);
  const DoubleMap to_b = distance_transform(b);
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]) worst = std::max(worst, to_b[i]);
    if (b[i]) worst = std::max(worst, to_a[i]);
  }
  return worst;
}

}  // namespace ffm
