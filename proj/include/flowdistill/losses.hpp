#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "flowdistill/data.hpp"
#include "flowdistill/graph.hpp"
#include "flowdistill/model.hpp"

namespace fd::losses {

enum class TblGranularity { kElement, kSample, kBatch };
enum class TblVariant { kPaperLiteral, kToTeacher };

struct LossWeights {
  double lambda_tbl = 0.10;
  double delta = 10.0;  // original flow units
  double lambda_kl = 1e-3;
  double lambda_spa = 0.6;
  double lambda_tem = 0.35;
  int64_t temporal_window = 12;  // H, even
  int64_t k_r = 8;
  TblGranularity granularity = TblGranularity::kElement;
  TblVariant variant = TblVariant::kPaperLiteral;
  bool use_tbl = true;
  bool use_kl = true;
  bool use_spa = true;
  bool use_tem = true;

  void validate() const {
    if (lambda_tbl < 0 || lambda_kl < 0 || lambda_spa < 0 || lambda_tem < 0) {
      throw ContractError("loss weights: lambdas must be >= 0");
    }
    if (delta < 0) throw ContractError("loss weights: delta must be >= 0");
    if (temporal_window < 0 || temporal_window % 2 != 0) {
      throw ContractError("loss weights: temporal window H must be even and >= 0");
    }
    if (k_r < 0) throw ContractError("loss weights: K_r must be >= 0");
  }
};

struct LossBreakdown {
  double reg = 0;
  double tbl = 0;
  double kl = 0;
  double spa = 0;
  double tem = 0;
  double total = 0;
  double tbl_gate_open_fraction = 0;
};

// Mean absolute error over all elements (the regression loss).
template <typename S>
NodeId build_regression(GraphT<S>& g, NodeId pred, NodeId target) {
  if (!g.value(pred).same_shape(g.value(target))) {
    throw ShapeError("regression_loss: shapes " + shape_str(g.value(pred).shape) + " vs " +
                     shape_str(g.value(target).shape));
  }
  return g.reduce_mean(g.abs_op(g.sub(pred, target)));
}

namespace detail {

template <typename S>
double unit_mae(const TensorT<S>& a, const TensorT<S>& b, int64_t lo, int64_t hi) {
  double acc = 0.0;
  for (int64_t i = lo; i < hi; ++i) {
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  }
  return acc / static_cast<double>(hi - lo);
}

}  // namespace detail

// Gate mask for the teacher-bounded loss: 1 on units where
// L_reg(teacher, target) - L_reg(pred, target) < delta, expanded to element
// shape. Returned separately so gradient checks can freeze it.
template <typename S>
TensorT<S> compute_gate_mask(const TensorT<S>& p, const TensorT<S>& t, const TensorT<S>& y,
                             double delta, TblGranularity granularity,
                             double* gate_open_fraction = nullptr) {
  if (!p.same_shape(t) || !p.same_shape(y)) {
    throw ShapeError("teacher_bounded_loss: shapes " + shape_str(p.shape) + " / " +
                     shape_str(t.shape) + " / " + shape_str(y.shape));
  }
  if (delta < 0) throw ContractError("teacher_bounded_loss: delta must be >= 0");

  TensorT<S> mask;
  mask.shape = p.shape;
  mask.values.assign(p.values.size(), S(0));
  int64_t open = 0, units = 0;

  if (granularity == TblGranularity::kElement) {
    units = p.numel();
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double lt = std::abs(static_cast<double>(t[i]) - static_cast<double>(y[i]));
      const double lp = std::abs(static_cast<double>(p[i]) - static_cast<double>(y[i]));
      if (lt - lp < delta) {
        mask[i] = S(1);
        ++open;
      }
    }
  } else if (granularity == TblGranularity::kSample) {
    const int64_t b = p.shape[0];
    const int64_t per = p.numel() / std::max<int64_t>(b, 1);
    units = b;
    for (int64_t s = 0; s < b; ++s) {
      const double lt = detail::unit_mae(t, y, s * per, (s + 1) * per);
      const double lp = detail::unit_mae(p, y, s * per, (s + 1) * per);
      if (lt - lp < delta) {
        ++open;
        for (int64_t i = s * per; i < (s + 1) * per; ++i) mask[i] = S(1);
      }
    }
  } else {
    units = 1;
    const double lt = detail::unit_mae(t, y, 0, p.numel());
    const double lp = detail::unit_mae(p, y, 0, p.numel());
    if (lt - lp < delta) {
      open = 1;
      std::fill(mask.values.begin(), mask.values.end(), S(1));
    }
  }

  if (gate_open_fraction) {
    *gate_open_fraction = units == 0 ? 0.0 : static_cast<double>(open) / static_cast<double>(units);
  }
  return mask;
}

// Teacher-bounded distillation loss. Per gating unit the gate opens iff
// L_reg(teacher, target) - L_reg(pred, target) < delta; open units contribute
// L_reg(pred, target) (paper-literal) or L_reg(pred, teacher) (to-teacher),
// closed units contribute 0, and the result is the mean over units. The gate
// is computed from the current forward values and enters the graph as a
// constant mask, so no gradient flows through the comparison. Pass
// frozen_mask to pin the gate (finite-difference checks).
template <typename S>
NodeId build_teacher_bounded(GraphT<S>& g, NodeId pred, NodeId teacher, NodeId target, double delta,
                             TblGranularity granularity, TblVariant variant,
                             double* gate_open_fraction,
                             const TensorT<S>* frozen_mask = nullptr) {
  TensorT<S> mask;
  if (frozen_mask) {
    if (!frozen_mask->same_shape(g.value(pred))) {
      throw ShapeError("teacher_bounded_loss: frozen mask shape mismatch");
    }
    mask = *frozen_mask;
    if (gate_open_fraction) {
      *gate_open_fraction = static_cast<double>(kernels::reduce_sum(mask.data(), mask.numel())) /
                            static_cast<double>(std::max<int64_t>(mask.numel(), 1));
    }
  } else {
    mask = compute_gate_mask(g.value(pred), g.value(teacher), g.value(target), delta, granularity,
                             gate_open_fraction);
  }
  NodeId mask_node = g.input(std::move(mask));
  NodeId ref = variant == TblVariant::kPaperLiteral ? target : teacher;
  return g.reduce_mean(g.mul(mask_node, g.abs_op(g.sub(pred, ref))));
}

// KL(q || N(0, I)) in closed form, summed over latent coordinates and
// normalized per sample (divided by the leading batch dimension).
template <typename S>
NodeId build_kl(GraphT<S>& g, const model::LatentNodes<S>& latent) {
  const TensorT<S>& s2 = g.value(latent.sigma2);
  for (const S v : s2.values) {
    if (!(v > S(0))) {
      throw ContractError("kl_divergence: sigma^2 must be positive, got " + std::to_string(v));
    }
  }
  const int64_t b = s2.shape.empty() ? 1 : s2.shape[0];
  NodeId ssum = g.reduce_sum(latent.sigma2);
  NodeId msum = g.reduce_sum(g.square(latent.mu));
  NodeId lsum = g.reduce_sum(g.log_op(latent.sigma2));
  NodeId count = g.input(TensorT<S>::scalar(static_cast<S>(s2.numel())));
  NodeId expr = g.sub(g.add(ssum, msum), g.add(lsum, count));
  return g.scale(expr, static_cast<S>(0.5 / static_cast<double>(b)));
}

// Mean over (b, s, t, c) of the summed absolute differences to each listed
// neighbor. Regions with empty lists contribute 0.
template <typename S>
NodeId build_spatial(GraphT<S>& g, NodeId pred,
                     const std::vector<std::vector<int64_t>>& neighbor_lists) {
  const TensorT<S>& p = g.value(pred);
  if (p.rank() != 4) throw ShapeError("spatial loss: pred must be [B,N,H,C], got " + shape_str(p.shape));
  const int64_t b = p.dim(0), n = p.dim(1), h = p.dim(2), c = p.dim(3);
  if (static_cast<int64_t>(neighbor_lists.size()) != n) {
    throw ShapeError("spatial loss: " + std::to_string(neighbor_lists.size()) +
                     " neighbor lists for " + std::to_string(n) + " regions");
  }
  std::vector<int64_t> left, right;
  for (int64_t bi = 0; bi < b; ++bi) {
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t nb : neighbor_lists[static_cast<size_t>(s)]) {
        if (nb < 0 || nb >= n) {
          throw BoundsError("spatial loss: neighbor " + std::to_string(nb) + " out of range");
        }
        left.push_back(bi * n + s);
        right.push_back(bi * n + nb);
      }
    }
  }
  NodeId p2 = g.reshape(pred, {b * n, h * c});
  NodeId diff = g.abs_op(g.sub(g.gather_rows(p2, left), g.gather_rows(p2, right)));
  return g.scale(g.reduce_sum(diff), static_cast<S>(1.0 / static_cast<double>(b * n * h * c)));
}

// Mean over (b, s, t, c) of the windowed absolute differences
// sum_{l != 0, |l| <= H/2, t+l in range} |y_t - y_{t+l}| / count(t).
template <typename S>
NodeId build_temporal(GraphT<S>& g, NodeId pred, int64_t window) {
  const TensorT<S>& p = g.value(pred);
  if (p.rank() != 4) throw ShapeError("temporal loss: pred must be [B,N,H,C], got " + shape_str(p.shape));
  if (window < 0 || window % 2 != 0) {
    throw ContractError("temporal loss: H must be even and >= 0");
  }
  const int64_t b = p.dim(0), n = p.dim(1), h = p.dim(2), c = p.dim(3);
  const int64_t half = window / 2;

  std::vector<int64_t> counts(static_cast<size_t>(h), 0);
  for (int64_t t = 0; t < h; ++t) {
    for (int64_t l = -half; l <= half; ++l) {
      if (l != 0 && t + l >= 0 && t + l < h) ++counts[static_cast<size_t>(t)];
    }
  }

  std::vector<int64_t> left, right;
  std::vector<S> weights;
  for (int64_t bi = 0; bi < b; ++bi) {
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t t = 0; t < h; ++t) {
        const int64_t cnt = counts[static_cast<size_t>(t)];
        if (cnt == 0) continue;
        const S w = static_cast<S>(1.0 / static_cast<double>(cnt));
        for (int64_t l = -half; l <= half; ++l) {
          if (l == 0 || t + l < 0 || t + l >= h) continue;
          left.push_back((bi * n + s) * h + t);
          right.push_back((bi * n + s) * h + t + l);
          weights.push_back(w);
        }
      }
    }
  }

  NodeId p2 = g.reshape(pred, {b * n * h, c});
  NodeId diff = g.abs_op(g.sub(g.gather_rows(p2, left), g.gather_rows(p2, right)));
  TensorT<S> wt({static_cast<int64_t>(weights.size()), c});
  for (int64_t i = 0; i < static_cast<int64_t>(weights.size()); ++i) {
    for (int64_t ch = 0; ch < c; ++ch) wt.at(i, ch) = weights[static_cast<size_t>(i)];
  }
  NodeId weighted = g.mul(diff, g.input(std::move(wt)));
  return g.scale(g.reduce_sum(weighted), static_cast<S>(1.0 / static_cast<double>(b * n * h * c)));
}

// pred_orig = pred_norm * std + mean, broadcast per channel; keeps gradients
// flowing in original flow units.
template <typename S>
NodeId build_denormalize(GraphT<S>& g, NodeId pred_norm, const data::NormStats& stats) {
  const int64_t c = g.value(pred_norm).shape.back();
  if (c != static_cast<int64_t>(stats.mean.size())) {
    throw ShapeError("denormalize: channel dim " + std::to_string(c) + " vs stats " +
                     std::to_string(stats.mean.size()));
  }
  TensorT<S> sd({c}), mn({c});
  for (int64_t i = 0; i < c; ++i) {
    sd[i] = static_cast<S>(stats.stddev[static_cast<size_t>(i)]);
    mn[i] = static_cast<S>(stats.mean[static_cast<size_t>(i)]);
  }
  return g.add(g.mul(pred_norm, g.input(std::move(sd))), g.input(std::move(mn)));
}

template <typename S>
struct LossNodes {
  NodeId reg = -1;
  NodeId tbl = -1;
  NodeId kl = -1;
  NodeId spa = -1;
  NodeId tem = -1;
  NodeId total = -1;
  double gate_open_fraction = 0.0;

  LossBreakdown values(const GraphT<S>& g, const LossWeights& w) const {
    LossBreakdown b;
    b.reg = static_cast<double>(g.scalar_value(reg));
    b.tbl = tbl >= 0 ? static_cast<double>(g.scalar_value(tbl)) : 0.0;
    b.kl = kl >= 0 ? static_cast<double>(g.scalar_value(kl)) : 0.0;
    b.spa = spa >= 0 ? static_cast<double>(g.scalar_value(spa)) : 0.0;
    b.tem = tem >= 0 ? static_cast<double>(g.scalar_value(tem)) : 0.0;
    b.total = static_cast<double>(g.scalar_value(total));
    b.tbl_gate_open_fraction = gate_open_fraction;
    return b;
  }
};

// total = reg + l_tbl*tbl + l_kl*kl + l_spa*spa + l_tem*tem. Ablated terms
// (flag off or weight zero) are skipped entirely and reported as 0.
// teacher = -1 is allowed only when the tbl term is off.
template <typename S>
LossNodes<S> build_total(GraphT<S>& g, NodeId pred_orig, NodeId teacher, NodeId target,
                         const model::LatentNodes<S>& latent, const LossWeights& w,
                         const std::vector<std::vector<int64_t>>& neighbor_lists,
                         const TensorT<S>* frozen_gate_mask = nullptr) {
  w.validate();
  LossNodes<S> nodes;
  nodes.reg = build_regression(g, pred_orig, target);
  NodeId total = nodes.reg;

  const bool want_tbl = w.use_tbl && w.lambda_tbl > 0;
  if (want_tbl) {
    if (teacher < 0) throw ContractError("total_loss: teacher required when lambda_tbl > 0");
    nodes.tbl = build_teacher_bounded(g, pred_orig, teacher, target, w.delta, w.granularity,
                                      w.variant, &nodes.gate_open_fraction, frozen_gate_mask);
    total = g.add(total, g.scale(nodes.tbl, static_cast<S>(w.lambda_tbl)));
  }
  if (w.use_kl && w.lambda_kl > 0) {
    nodes.kl = build_kl(g, latent);
    total = g.add(total, g.scale(nodes.kl, static_cast<S>(w.lambda_kl)));
  }
  if (w.use_spa && w.lambda_spa > 0) {
    nodes.spa = build_spatial(g, pred_orig, neighbor_lists);
    total = g.add(total, g.scale(nodes.spa, static_cast<S>(w.lambda_spa)));
  }
  if (w.use_tem && w.lambda_tem > 0) {
    nodes.tem = build_temporal(g, pred_orig, w.temporal_window);
    total = g.add(total, g.scale(nodes.tem, static_cast<S>(w.lambda_tem)));
  }
  nodes.total = total;
  return nodes;
}

// ---- plain-value conveniences (throwaway graph per call) ----

template <typename S>
double regression_loss(const TensorT<S>& pred, const TensorT<S>& target) {
  GraphT<S> g;
  return static_cast<double>(g.scalar_value(build_regression(g, g.input(pred), g.input(target))));
}

template <typename S>
double teacher_bounded_loss(const TensorT<S>& pred, const TensorT<S>& teacher,
                            const TensorT<S>& target, double delta, TblGranularity granularity,
                            TblVariant variant, double* gate_open_fraction = nullptr) {
  GraphT<S> g;
  return static_cast<double>(g.scalar_value(
      build_teacher_bounded(g, g.input(pred), g.input(teacher), g.input(target), delta, granularity,
                            variant, gate_open_fraction)));
}

template <typename S>
double kl_divergence(const TensorT<S>& mu, const TensorT<S>& sigma2) {
  GraphT<S> g;
  model::LatentNodes<S> latent{g.input(mu), g.input(sigma2)};
  return static_cast<double>(g.scalar_value(build_kl(g, latent)));
}

template <typename S>
double spatial_correlation_loss(const TensorT<S>& pred,
                                const std::vector<std::vector<int64_t>>& neighbor_lists) {
  GraphT<S> g;
  return static_cast<double>(g.scalar_value(build_spatial(g, g.input(pred), neighbor_lists)));
}

template <typename S>
double temporal_correlation_loss(const TensorT<S>& pred, int64_t window) {
  GraphT<S> g;
  return static_cast<double>(g.scalar_value(build_temporal(g, g.input(pred), window)));
}

}  // namespace fd::losses
