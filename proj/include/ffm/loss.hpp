#pragma once

// Segmentation losses: soft IoU (optionally pixel-weighted), binary cross
// entropy, and their weighted composites, with analytic gradients with
// respect to the predicted probabilities. All reductions run in a fixed
// sequential order in double precision.

#include <algorithm>
#include <cmath>
#include <string>

#include "ffm/grid.hpp"

namespace ffm {

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 0.5;
  double eta = 1.0;
  double clamp_eps = 1e-7;

  void validate() const {
    if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
    if (!(clamp_eps > 0 && clamp_eps < 0.5))
      throw Error(ErrorCode::InvalidArgument, "clamp_eps must lie in (0, 0.5)");
  }
};

/// Ground truth y in {0, 1} and prediction y_hat in [0, 1] of equal shape.
template <class T>
struct PredictionPair {
  const Grid<T>& y;
  const Grid<T>& y_hat;

  void validate() const {
    require_same_shape(y, y_hat, "prediction pair");
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != T(0) && y[i] != T(1))
        throw Error(ErrorCode::OutOfRange, "ground truth values must be 0 or 1");
      if (!(y_hat[i] >= T(0) && y_hat[i] <= T(1)))
        throw Error(ErrorCode::OutOfRange, "predictions must lie in [0, 1]");
    }
  }
};

template <class T>
PredictionPair(const Grid<T>&, const Grid<T>&) -> PredictionPair<T>;

namespace detail {

template <class T>
void check_weights(const Grid<T>& weights, const Grid<T>& like) {
  require_same_shape(weights, like, "loss weights");
  for (auto v : weights.values())
    if (!(v >= T(0))) throw Error(ErrorCode::OutOfRange, "loss weights must be non-negative");
}

// Weighted intersection and union sums; a null weight map means unit weights.
template <class T>
std::pair<double, double> iou_sums(const PredictionPair<T>& pair, const Grid<T>* weights) {
  double inter = 0, uni = 0;
  for (std::size_t i = 0; i < pair.y.size(); ++i) {
    const double y = pair.y[i], p = pair.y_hat[i];
    const double w = weights ? static_cast<double>((*weights)[i]) : 1.0;
    inter += w * (y * p);
    uni += w * (y + p - y * p);
  }
  return {inter, uni};
}

template <class T>
double soft_iou_impl(const PredictionPair<T>& pair, double eta, const Grid<T>* weights) {
  pair.validate();
  if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
  if (weights) check_weights(*weights, pair.y);
  const auto [inter, uni] = iou_sums(pair, weights);
  return 1.0 - inter / (uni + eta);
}

template <class T>
Grid<T> grad_soft_iou_impl(const PredictionPair<T>& pair, double eta, const Grid<T>* weights) {
  pair.validate();
  if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
  if (weights) check_weights(*weights, pair.y);
  const auto [inter, uni] = iou_sums(pair, weights);
  const double denom = uni + eta;
  Grid<T> grad(pair.y.width(), pair.y.height());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double y = pair.y[i];
    const double w = weights ? static_cast<double>((*weights)[i]) : 1.0;
    // d inter / d p = w y,  d uni / d p = w (1 - y)
    grad[i] = static_cast<T>(-(w * y * denom - inter * w * (1.0 - y)) / (denom * denom));
  }
  return grad;
}

}  // namespace detail

/// 1 - sum(y p) / (sum(y + p - y p) + eta).
template <class T>
double soft_iou_loss(const PredictionPair<T>& pair, double eta) {
  return detail::soft_iou_impl<T>(pair, eta, nullptr);
}

/// Pixel-weighted form: weights enter both the intersection and union sums.
template <class T>
double soft_iou_loss(const PredictionPair<T>& pair, double eta, const Grid<T>& weights) {
  return detail::soft_iou_impl<T>(pair, eta, &weights);
}

template <class T>
Grid<T> grad_soft_iou(const PredictionPair<T>& pair, double eta) {
  return detail::grad_soft_iou_impl<T>(pair, eta, nullptr);
}

template <class T>
Grid<T> grad_soft_iou(const PredictionPair<T>& pair, double eta, const Grid<T>& weights) {
  return detail::grad_soft_iou_impl<T>(pair, eta, &weights);
}

/// Mean binary cross entropy with predictions clamped to [eps, 1 - eps].
template <class T>
double bce_loss(const PredictionPair<T>& pair, double clamp_eps = 1e-7) {
  pair.validate();
  if (!(clamp_eps > 0 && clamp_eps < 0.5))
    throw Error(ErrorCode::InvalidArgument, "clamp_eps must lie in (0, 0.5)");
  double sum = 0;
  for (std::size_t i = 0; i < pair.y.size(); ++i) {
    const double y = pair.y[i];
    const double p = std::clamp(static_cast<double>(pair.y_hat[i]), clamp_eps, 1.0 - clamp_eps);
    sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(pair.y.size());
}

/// Zero where the clamp is active.
template <class T>
Grid<T> grad_bce(const PredictionPair<T>& pair, double clamp_eps = 1e-7) {
  pair.validate();
  if (!(clamp_eps > 0 && clamp_eps < 0.5))
    throw Error(ErrorCode::InvalidArgument, "clamp_eps must lie in (0, 0.5)");
  const double n = static_cast<double>(pair.y.size());
  Grid<T> grad(pair.y.width(), pair.y.height());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double y = pair.y[i], p = pair.y_hat[i];
    if (p < clamp_eps || p > 1.0 - clamp_eps) continue;
    grad[i] = static_cast<T>(-(y / p - (1.0 - y) / (1.0 - p)) / n);
  }
  return grad;
}

inline double global_loss(double object, double edge, double skeleton, const LossWeights& w = {}) {
  return w.alpha * object + w.beta * edge + w.gamma * skeleton;
}

/// Global loss whose object term is the soft IoU weighted by the label FFM.
template <class T>
double constrained_loss(const PredictionPair<T>& object, const PredictionPair<T>& edge,
                        const PredictionPair<T>& skeleton, const Grid<T>& ffm_label,
                        const LossWeights& w = {}) {
  w.validate();
  require_same_shape(ffm_label, object.y, "constrained loss weights");
  return global_loss(soft_iou_loss(object, w.eta, ffm_label), bce_loss(edge, w.clamp_eps),
                     bce_loss(skeleton, w.clamp_eps), w);
}

}  // namespace ffm
