#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowdistill/data.hpp"
#include "flowdistill/graph.hpp"
#include "flowdistill/rng.hpp"

namespace fd::model {

enum class NoiseMode { kStd, kPaperVariance };
enum class EvalMode { kMean, kSample };
enum class Activation { kRelu, kSoftplus };

struct ModelConfig {
  int64_t embed_dim = 64;   // d
  int64_t layers = 3;       // L; layers-1 hidden blocks plus the latent head
  int64_t bottleneck = 64;  // K
  int64_t h_in = 12;
  int64_t h_out = 12;
  int64_t regions = 0;    // N
  int64_t tod_slots = 48; // T1
  int64_t dow_slots = 7;  // T2
  int64_t channels = 1;   // C
  NoiseMode noise_mode = NoiseMode::kStd;
  EvalMode eval_mode = EvalMode::kMean;
  Activation activation = Activation::kRelu;

  int64_t width() const { return 4 * embed_dim; }

  void validate() const {
    if (embed_dim < 1 || layers < 1 || bottleneck < 1 || h_in < 1 || h_out < 1 || regions < 1 ||
        tod_slots < 1 || dow_slots < 1 || channels < 1) {
      throw ContractError("model config: all dimensions must be >= 1");
    }
  }

  int64_t param_count() const {
    const int64_t d = embed_dim, w = width(), k = bottleneck;
    int64_t total = regions * d + tod_slots * d + dow_slots * d;  // embeddings
    total += channels * d + d;                                    // input projection
    total += (layers - 1) * (w * w + w);                          // hidden blocks
    total += w * 2 * k + 2 * k;                                   // latent head
    total += h_in * k * h_out * channels + h_out * channels;      // decoder
    return total;
  }
};

template <typename S>
struct ParamSetT {
  ModelConfig cfg;
  std::vector<std::pair<std::string, TensorT<S>>> tensors;

  TensorT<S>& find(const std::string& name) {
    for (auto& [n, t] : tensors) {
      if (n == name) return t;
    }
    throw ContractError("params: no tensor named '" + name + "'");
  }
  const TensorT<S>& find(const std::string& name) const {
    return const_cast<ParamSetT*>(this)->find(name);
  }

  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& [name, t] : tensors) n += t.numel();
    return n;
  }
};

using ParamSet = ParamSetT<float>;

inline std::string enc_name(int64_t i) { return "enc" + std::to_string(i); }

// Weights uniform in +-1/sqrt(fan_in), biases zero, embeddings uniform +-0.1.
// Deterministic in the seed: one PRNG stream per tensor ordinal.
template <typename S>
ParamSetT<S> init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ParamSetT<S> params;
  params.cfg = cfg;
  const int64_t d = cfg.embed_dim, w = cfg.width(), k = cfg.bottleneck;

  uint64_t ordinal = 0;
  auto embed = [&](const std::string& name, int64_t rows) {
    TensorT<S> t({rows, d});
    SplitMix64 rng(seed, streams::kParamInit + 100 * (++ordinal));
    rng.fill_uniform(t.data(), t.numel(), -0.1, 0.1);
    params.tensors.emplace_back(name, std::move(t));
  };
  auto linear = [&](const std::string& name, int64_t fan_in, int64_t fan_out) {
    TensorT<S> wt({fan_in, fan_out});
    SplitMix64 rng(seed, streams::kParamInit + 100 * (++ordinal));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    rng.fill_uniform(wt.data(), wt.numel(), -bound, bound);
    params.tensors.emplace_back(name + ".weight", std::move(wt));
    params.tensors.emplace_back(name + ".bias", TensorT<S>({fan_out}));
  };

  embed("embed.spatial", cfg.regions);
  embed("embed.tod", cfg.tod_slots);
  embed("embed.dow", cfg.dow_slots);
  linear("proj", cfg.channels, d);
  for (int64_t i = 1; i < cfg.layers; ++i) linear(enc_name(i), w, w);
  linear("head", w, 2 * k);
  linear("dec", cfg.h_in * k, cfg.h_out * cfg.channels);
  return params;
}

template <typename Out, typename In>
ParamSetT<Out> cast_params(const ParamSetT<In>& p) {
  ParamSetT<Out> out;
  out.cfg = p.cfg;
  out.tensors.reserve(p.tensors.size());
  for (const auto& [name, t] : p.tensors) out.tensors.emplace_back(name, cast_tensor<Out>(t));
  return out;
}

// Parameter tensors bound into a graph as param leaves.
template <typename S>
struct BoundParams {
  std::map<std::string, NodeId> ids;

  NodeId at(const std::string& name) const {
    auto it = ids.find(name);
    if (it == ids.end()) throw ContractError("bound params: no tensor named '" + name + "'");
    return it->second;
  }
};

template <typename S>
BoundParams<S> bind_params(GraphT<S>& g, const ParamSetT<S>& params) {
  BoundParams<S> bound;
  for (const auto& [name, t] : params.tensors) bound.ids.emplace(name, g.param(t));
  return bound;
}

// Calendar index columns for one batch, in (b, n, t) row order.
struct BatchIndices {
  std::vector<int64_t> spatial;
  std::vector<int64_t> tod;
  std::vector<int64_t> dow;
};

inline BatchIndices batch_indices(const data::WindowBatch& batch, const ModelConfig& cfg) {
  const int64_t b = batch.batch_size();
  const int64_t n = cfg.regions;
  const int64_t h = cfg.h_in;
  BatchIndices idx;
  idx.spatial.reserve(static_cast<size_t>(b * n * h));
  idx.tod.reserve(static_cast<size_t>(b * n * h));
  idx.dow.reserve(static_cast<size_t>(b * n * h));
  for (int64_t bi = 0; bi < b; ++bi) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t t = 0; t < h; ++t) {
        idx.spatial.push_back(r);
        idx.tod.push_back(batch.tod_idx[static_cast<size_t>(bi * h + t)]);
        idx.dow.push_back(batch.dow_idx[static_cast<size_t>(bi * h + t)]);
      }
    }
  }
  return idx;
}

// E = FC(X) || E_spatial || E_tod || E_dow per (sample, region, input step).
template <typename S>
NodeId assemble_embeddings(GraphT<S>& g, const BoundParams<S>& p, const ModelConfig& cfg,
                           NodeId inputs, const BatchIndices& idx) {
  const auto& shape = g.value(inputs).shape;
  const int64_t b = shape[0], n = shape[1], h = shape[2], c = shape[3];
  NodeId x2 = g.reshape(inputs, {b * n * h, c});
  NodeId proj = affine(g, x2, p.at("proj.weight"), p.at("proj.bias"));
  NodeId es = g.gather_rows(p.at("embed.spatial"), idx.spatial);
  NodeId etod = g.gather_rows(p.at("embed.tod"), idx.tod);
  NodeId edow = g.gather_rows(p.at("embed.dow"), idx.dow);
  NodeId cat = g.concat_last({proj, es, etod, edow});
  return g.reshape(cat, {b, n, h, 4 * cfg.embed_dim});
}

template <typename S>
struct LatentNodes {
  NodeId mu;      // [B, N, H_in, K]
  NodeId sigma2;  // [B, N, H_in, K], strictly positive
};

// MLP encoder: layers-1 hidden blocks, then a 2K head split into the latent
// mean and softplus variance.
template <typename S>
LatentNodes<S> encode_latent(GraphT<S>& g, const BoundParams<S>& p, const ModelConfig& cfg,
                             NodeId embeddings) {
  const auto& shape = g.value(embeddings).shape;
  const int64_t b = shape[0], n = shape[1], h = shape[2];
  const int64_t rows = b * n * h;
  NodeId hcur = g.reshape(embeddings, {rows, cfg.width()});
  for (int64_t i = 1; i < cfg.layers; ++i) {
    NodeId pre = affine(g, hcur, p.at(enc_name(i) + ".weight"), p.at(enc_name(i) + ".bias"));
    hcur = cfg.activation == Activation::kRelu ? g.relu(pre) : g.softplus(pre);
    for (const S v : g.value(hcur).values) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NumericError("encoder layer " + std::to_string(i) + ": non-finite activations");
      }
    }
  }
  NodeId head = affine(g, hcur, p.at("head.weight"), p.at("head.bias"));
  const int64_t k = cfg.bottleneck;
  LatentNodes<S> latent;
  latent.mu = g.reshape(g.slice_last(head, 0, k), {b, n, h, k});
  latent.sigma2 = g.reshape(g.softplus(g.slice_last(head, k, k)), {b, n, h, k});
  return latent;
}

// Reparameterized sample. eps < 0 means "no noise": Z = mu exactly, the
// deterministic eval path. Mode kStd scales eps by the standard deviation;
// kPaperVariance multiplies by the variance itself.
template <typename S>
NodeId sample_latent(GraphT<S>& g, const LatentNodes<S>& latent, NodeId eps, NoiseMode mode) {
  if (eps < 0) return latent.mu;
  if (!g.value(eps).same_shape(g.value(latent.mu))) {
    throw ShapeError("sample_latent: eps shape " + shape_str(g.value(eps).shape) +
                     " vs latent " + shape_str(g.value(latent.mu).shape));
  }
  NodeId scale = mode == NoiseMode::kStd ? g.sqrt_op(latent.sigma2) : latent.sigma2;
  return g.add(latent.mu, g.mul(scale, eps));
}

// Per (sample, region): flatten H_in x K and map affinely to H_out x C.
// Output stays in normalized units.
template <typename S>
NodeId decode_prediction(GraphT<S>& g, const BoundParams<S>& p, const ModelConfig& cfg, NodeId z) {
  const auto& shape = g.value(z).shape;
  const int64_t b = shape[0], n = shape[1];
  NodeId z2 = g.reshape(z, {b * n, cfg.h_in * cfg.bottleneck});
  NodeId out = affine(g, z2, p.at("dec.weight"), p.at("dec.bias"));
  return g.reshape(out, {b, n, cfg.h_out, cfg.channels});
}

template <typename S>
struct ForwardNodes {
  NodeId pred_norm;  // [B, N, H_out, C], normalized units
  LatentNodes<S> latent;
};

// assemble -> encode -> sample -> decode. Pass eps = -1 for the
// deterministic latent-mean path (eval with eval_mode = mean).
template <typename S>
ForwardNodes<S> forward(GraphT<S>& g, const BoundParams<S>& p, const ModelConfig& cfg,
                        NodeId inputs, const BatchIndices& idx, NodeId eps) {
  ForwardNodes<S> f;
  NodeId emb = assemble_embeddings(g, p, cfg, inputs, idx);
  f.latent = encode_latent(g, p, cfg, emb);
  NodeId z = sample_latent(g, f.latent, eps, cfg.noise_mode);
  f.pred_norm = decode_prediction(g, p, cfg, z);
  return f;
}

}  // namespace fd::model
