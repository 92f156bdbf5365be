#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowdistill/graph.hpp"

namespace fd {

// Named views into a set of parameter tensors being checked.
template <typename S>
using NamedParams = std::vector<std::pair<std::string, TensorT<S>*>>;

template <typename S>
using ParamNodeMap = std::map<std::string, NodeId>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t coords_checked = 0;
};

// Bind a constant tensor into a graph of any scalar type.
template <typename G, typename S>
NodeId as_input(G& g, const TensorT<S>& t) {
  return g.input(cast_tensor<typename G::scalar_type>(t));
}

// Central-difference gradient check. `build` must construct the loss graph
// from scratch on every call (binding the current parameter values via the
// id map) and be deterministic: any sampling noise has to be frozen by the
// caller. It is invoked with graphs of two scalar types, so write it as a
// generic lambda.
//
// The analytic gradients under test are computed in S (the 64-bit
// verification mode); the finite-difference oracle side runs in 80-bit
// extended precision, keeping the oracle's own rounding noise
// (~1e-16*|f|/eps in plain double) well below the 1e-8 denominator floor.
// Relative error uses denominator max(|analytic|, 1e-8).
template <typename S, typename Build>
GradCheckReport grad_check(NamedParams<S> params, Build build, double eps) {
  if (!(eps > 0.0)) throw ContractError("grad_check: eps must be > 0");

  // Analytic pass in S.
  std::map<std::string, TensorT<S>> analytic;
  {
    GraphT<S> g;
    ParamNodeMap<S> ids;
    for (auto& [name, tensor] : params) ids.emplace(name, g.param(*tensor));
    NodeId loss = build(g, ids);
    if (!std::isfinite(static_cast<double>(g.scalar_value(loss)))) {
      throw NumericError("grad_check: non-finite loss");
    }
    auto grads = g.backward(loss);
    for (auto& [name, id] : ids) analytic.emplace(name, std::move(grads.at(id)));
  }

  // Oracle evaluations in extended precision on the (perturbed) S values.
  auto loss_value = [&]() -> long double {
    GraphT<long double> g;
    ParamNodeMap<long double> ids;
    for (auto& [name, tensor] : params) {
      ids.emplace(name, g.param(cast_tensor<long double>(*tensor)));
    }
    NodeId loss = build(g, ids);
    const long double v = g.scalar_value(loss);
    if (!std::isfinite(static_cast<double>(v))) throw NumericError("grad_check: non-finite loss");
    return v;
  };

  GradCheckReport report;
  for (auto& [name, tensor] : params) {
    const TensorT<S>& g = analytic.at(name);
    for (int64_t i = 0; i < tensor->numel(); ++i) {
      const S saved = (*tensor)[i];
      (*tensor)[i] = saved + static_cast<S>(eps);
      const long double f_plus = loss_value();
      (*tensor)[i] = saved - static_cast<S>(eps);
      const long double f_minus = loss_value();
      (*tensor)[i] = saved;

      const double fd = static_cast<double>((f_plus - f_minus) / (2.0L * static_cast<long double>(eps)));
      const double ga = static_cast<double>(g[i]);
      const double rel = std::abs(fd - ga) / std::max(std::abs(ga), 1e-8);
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace fd
