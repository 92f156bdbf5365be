#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowdistill/gradcheck.hpp"
#include "flowdistill/losses.hpp"
#include "flowdistill/model.hpp"

using namespace fd;
using namespace fd::model;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.layers = 3;
  cfg.bottleneck = 8;
  cfg.h_in = 4;
  cfg.h_out = 4;
  cfg.regions = 5;
  cfg.tod_slots = 4;
  cfg.dow_slots = 7;
  cfg.channels = 1;
  return cfg;
}

data::WindowBatch tiny_batch(const ModelConfig& cfg, uint64_t seed, int64_t b = 2) {
  data::WindowBatch batch;
  batch.inputs = Tensor({b, cfg.regions, cfg.h_in, cfg.channels});
  batch.targets = Tensor({b, cfg.regions, cfg.h_out, cfg.channels});
  SplitMix64 rng(seed, 99);
  rng.fill_uniform(batch.inputs.data(), batch.inputs.numel(), -1.0, 1.0);
  rng.fill_uniform(batch.targets.data(), batch.targets.numel(), 0.0, 10.0);
  batch.tod_idx.resize(static_cast<size_t>(b * cfg.h_in));
  batch.dow_idx.resize(static_cast<size_t>(b * cfg.h_in));
  for (size_t i = 0; i < batch.tod_idx.size(); ++i) {
    batch.tod_idx[i] = static_cast<int>(rng.below(cfg.tod_slots));
    batch.dow_idx[i] = static_cast<int>(rng.below(cfg.dow_slots));
  }
  for (int64_t i = 0; i < b; ++i) batch.window_starts.push_back(i);
  return batch;
}

}  // namespace

TEST_CASE("init_params is deterministic with declared shapes and zero biases") {
  ModelConfig cfg = tiny_config();
  ParamSet a = init_params<float>(cfg, 7);
  ParamSet b = init_params<float>(cfg, 7);
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(a.tensors[i].first == b.tensors[i].first);
    CHECK(a.tensors[i].second.values == b.tensors[i].second.values);
  }
  ParamSet c = init_params<float>(cfg, 8);
  CHECK(c.find("embed.spatial").values != a.find("embed.spatial").values);

  CHECK(a.find("embed.spatial").shape == std::vector<int64_t>{5, 8});
  CHECK(a.find("proj.weight").shape == std::vector<int64_t>{1, 8});
  CHECK(a.find("enc1.weight").shape == std::vector<int64_t>{32, 32});
  CHECK(a.find("head.weight").shape == std::vector<int64_t>{32, 16});
  CHECK(a.find("dec.weight").shape == std::vector<int64_t>{32, 4});

  for (const auto& [name, t] : a.tensors) {
    if (name.find(".bias") != std::string::npos) {
      for (float v : t.values) CHECK(v == 0.0f);
    }
  }
  CHECK(a.total_elements() == cfg.param_count());
}

TEST_CASE("assemble_embeddings shape and zero case") {
  ModelConfig cfg = tiny_config();
  cfg.regions = 3;
  cfg.embed_dim = 8;
  ParamSet params = init_params<float>(cfg, 3);
  for (auto& [name, t] : params.tensors) std::fill(t.values.begin(), t.values.end(), 0.0f);

  data::WindowBatch batch = tiny_batch(cfg, 5);
  std::fill(batch.inputs.values.begin(), batch.inputs.values.end(), 0.0f);

  Graph g;
  auto bound = bind_params(g, params);
  NodeId in = g.input(batch.inputs);
  NodeId emb = assemble_embeddings(g, bound, cfg, in, batch_indices(batch, cfg));
  CHECK(g.value(emb).shape == std::vector<int64_t>{2, 3, 4, 32});
  for (float v : g.value(emb).values) CHECK(v == 0.0f);
}

TEST_CASE("assemble_embeddings is a pure function of (flows, indices)") {
  ModelConfig cfg = tiny_config();
  ParamSet params = init_params<float>(cfg, 3);
  data::WindowBatch batch = tiny_batch(cfg, 5);
  // sample 1 copies sample 0's rows and indices
  const int64_t per = batch.inputs.numel() / 2;
  for (int64_t i = 0; i < per; ++i) batch.inputs[per + i] = batch.inputs[i];
  for (int64_t t = 0; t < cfg.h_in; ++t) {
    batch.tod_idx[static_cast<size_t>(cfg.h_in + t)] = batch.tod_idx[static_cast<size_t>(t)];
    batch.dow_idx[static_cast<size_t>(cfg.h_in + t)] = batch.dow_idx[static_cast<size_t>(t)];
  }
  Graph g;
  auto bound = bind_params(g, params);
  NodeId emb = assemble_embeddings(g, bound, cfg, g.input(batch.inputs), batch_indices(batch, cfg));
  const auto& e = g.value(emb);
  const int64_t per_e = cfg.regions * cfg.h_in * 4 * cfg.embed_dim;
  for (int64_t i = 0; i < per_e; ++i) {
    CHECK(e[i] == e[per_e + i]);
  }
}

TEST_CASE("encode_latent zero weights give mu 0 and sigma2 softplus(0)") {
  ModelConfig cfg = tiny_config();
  ParamSet params = init_params<float>(cfg, 3);
  for (auto& [name, t] : params.tensors) std::fill(t.values.begin(), t.values.end(), 0.0f);
  data::WindowBatch batch = tiny_batch(cfg, 5);

  Graph g;
  auto bound = bind_params(g, params);
  NodeId emb = assemble_embeddings(g, bound, cfg, g.input(batch.inputs), batch_indices(batch, cfg));
  auto latent = encode_latent(g, bound, cfg, emb);
  CHECK(g.value(latent.mu).shape == std::vector<int64_t>{2, 5, 4, 8});
  const float ln2 = std::log(2.0f);
  for (float v : g.value(latent.mu).values) CHECK(v == 0.0f);
  for (float v : g.value(latent.sigma2).values) CHECK(v == doctest::Approx(ln2));
}

TEST_CASE("encode_latent sigma2 is strictly positive on random input") {
  ModelConfig cfg = tiny_config();
  ParamSet params = init_params<float>(cfg, 17);
  data::WindowBatch batch = tiny_batch(cfg, 6);
  Graph g;
  auto bound = bind_params(g, params);
  NodeId emb = assemble_embeddings(g, bound, cfg, g.input(batch.inputs), batch_indices(batch, cfg));
  auto latent = encode_latent(g, bound, cfg, emb);
  for (float v : g.value(latent.sigma2).values) CHECK(v > 0.0f);
}

TEST_CASE("encode_latent with L=1 is head-only") {
  ModelConfig cfg = tiny_config();
  cfg.layers = 1;
  ParamSet params = init_params<float>(cfg, 4);
  CHECK_THROWS_AS(params.find("enc1.weight"), ContractError);
  data::WindowBatch batch = tiny_batch(cfg, 6);
  Graph g;
  auto bound = bind_params(g, params);
  NodeId emb = assemble_embeddings(g, bound, cfg, g.input(batch.inputs), batch_indices(batch, cfg));
  CHECK_NOTHROW(encode_latent(g, bound, cfg, emb));
}

TEST_CASE("sample_latent modes") {
  GraphD g;
  model::LatentNodes<double> latent;
  latent.mu = g.input(TensorD({1}, {0.5}));
  latent.sigma2 = g.input(TensorD({1}, {4.0}));

  NodeId eps0 = g.input(TensorD({1}, {0.0}));
  CHECK(g.value(sample_latent(g, latent, eps0, NoiseMode::kStd))[0] == 0.5);

  NodeId eps1 = g.input(TensorD({1}, {1.0}));
  CHECK(g.value(sample_latent(g, latent, eps1, NoiseMode::kStd))[0] == doctest::Approx(2.5));
  CHECK(g.value(sample_latent(g, latent, eps1, NoiseMode::kPaperVariance))[0] ==
        doctest::Approx(4.5));

  // eps = -1: deterministic mean path
  CHECK(g.value(sample_latent(g, latent, -1, NoiseMode::kStd))[0] == 0.5);
}

TEST_CASE("sample variance tracks sigma2 over 1e5 draws") {
  const int64_t n = 100000;
  TensorD mu = TensorD::full({n}, 0.5);
  TensorD sigma2 = TensorD::full({n}, 4.0);
  TensorD eps({n});
  SplitMix64 rng(2024);
  rng.fill_gaussian(eps.data(), n);

  GraphD g;
  model::LatentNodes<double> latent{g.input(mu), g.input(sigma2)};
  NodeId z = sample_latent(g, latent, g.input(eps), NoiseMode::kStd);
  const auto& vals = g.value(z).values;
  double mean = 0, sq = 0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(n);
  for (double v : vals) sq += (v - mean) * (v - mean);
  const double var = sq / static_cast<double>(n);
  CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("decode_prediction shapes, zero case, affine linearity") {
  ModelConfig cfg = tiny_config();
  ParamSet params = init_params<float>(cfg, 12);
  Graph g;
  auto bound = bind_params(g, params);
  Tensor zt({2, cfg.regions, cfg.h_in, cfg.bottleneck});
  SplitMix64 rng(8);
  rng.fill_uniform(zt.data(), zt.numel(), -1.0, 1.0);
  NodeId z = g.input(zt);
  NodeId pred = decode_prediction(g, bound, cfg, z);
  CHECK(g.value(pred).shape == std::vector<int64_t>{2, cfg.regions, cfg.h_out, cfg.channels});

  NodeId z2 = g.input([&] {
    Tensor t = zt;
    for (auto& v : t.values) v *= 2.0f;
    return t;
  }());
  NodeId zero = g.input(Tensor(zt.shape));
  NodeId pred2 = decode_prediction(g, bound, cfg, z2);
  NodeId pred0 = decode_prediction(g, bound, cfg, zero);
  const auto& p1 = g.value(pred).values;
  const auto& p2 = g.value(pred2).values;
  const auto& p0 = g.value(pred0).values;
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p2[i] - p1[i] == doctest::Approx(p1[i] - p0[i]).epsilon(1e-4));
  }

  ParamSet zerop = init_params<float>(cfg, 12);
  std::fill(zerop.find("dec.weight").values.begin(), zerop.find("dec.weight").values.end(), 0.0f);
  Graph g2;
  auto bound2 = bind_params(g2, zerop);
  NodeId predz = decode_prediction(g2, bound2, cfg, g2.input(zt));
  for (float v : g2.value(predz).values) CHECK(v == 0.0f);
}

TEST_CASE("eval-mean forward is deterministic, train draws differ") {
  ModelConfig cfg = tiny_config();
  ParamSet params = init_params<float>(cfg, 31);
  data::WindowBatch batch = tiny_batch(cfg, 77);
  auto idx = batch_indices(batch, cfg);

  auto run_mean = [&]() {
    Graph g;
    auto bound = bind_params(g, params);
    auto f = forward(g, bound, cfg, g.input(batch.inputs), idx, -1);
    return g.value(f.pred_norm).values;
  };
  CHECK(run_mean() == run_mean());

  auto run_noise = [&](uint64_t draw) {
    Graph g;
    auto bound = bind_params(g, params);
    Tensor eps({2, cfg.regions, cfg.h_in, cfg.bottleneck});
    SplitMix64 rng(1000 + draw);
    rng.fill_gaussian(eps.data(), eps.numel());
    auto f = forward(g, bound, cfg, g.input(batch.inputs), idx, g.input(eps));
    return g.value(f.pred_norm).values;
  };
  CHECK(run_noise(1) != run_noise(2));
}

TEST_CASE("region permutation equivariance") {
  ModelConfig cfg = tiny_config();
  ParamSet params = init_params<float>(cfg, 55);
  data::WindowBatch batch = tiny_batch(cfg, 91);
  auto idx = batch_indices(batch, cfg);

  const std::vector<int64_t> perm = {3, 0, 4, 1, 2};

  // permute regions in the batch and rows of the spatial embedding together
  ParamSet pparams = params;
  Tensor& es = params.find("embed.spatial");
  Tensor& pes = pparams.find("embed.spatial");
  for (int64_t r = 0; r < cfg.regions; ++r) {
    for (int64_t j = 0; j < cfg.embed_dim; ++j) pes.at(r, j) = es.at(perm[r], j);
  }
  data::WindowBatch pbatch = batch;
  for (int64_t b = 0; b < 2; ++b) {
    for (int64_t r = 0; r < cfg.regions; ++r) {
      for (int64_t t = 0; t < cfg.h_in; ++t) {
        pbatch.inputs.at(b, r, t, 0) = batch.inputs.at(b, perm[r], t, 0);
      }
    }
  }

  Graph g1;
  auto f1 = forward(g1, bind_params(g1, params), cfg, g1.input(batch.inputs), idx, -1);
  Graph g2;
  auto f2 = forward(g2, bind_params(g2, pparams), cfg, g2.input(pbatch.inputs),
                    batch_indices(pbatch, cfg), -1);

  for (int64_t b = 0; b < 2; ++b) {
    for (int64_t r = 0; r < cfg.regions; ++r) {
      for (int64_t t = 0; t < cfg.h_out; ++t) {
        CHECK(g2.value(f2.pred_norm).at(b, r, t, 0) ==
              g1.value(f1.pred_norm).at(b, perm[r], t, 0));
      }
    }
  }
}

TEST_CASE("end-to-end mean-forward + MAE gradient check") {
  ModelConfig cfg = tiny_config();
  ParamSetT<double> params = cast_params<double>(init_params<float>(cfg, 2));
  data::WindowBatch batch = tiny_batch(cfg, 3);
  TensorD inputs = cast_tensor<double>(batch.inputs);
  TensorD targets = cast_tensor<double>(batch.targets);
  auto idx = batch_indices(batch, cfg);

  NamedParams<double> named;
  for (auto& [name, t] : params.tensors) named.emplace_back(name, &t);

  auto build = [&](auto& g, auto& ids) {
    using S2 = typename std::decay_t<decltype(g)>::scalar_type;
    BoundParams<S2> bound;
    bound.ids = std::map<std::string, NodeId>(ids.begin(), ids.end());
    auto f = forward(g, bound, cfg, as_input(g, inputs), idx, -1);
    return losses::build_regression(g, f.pred_norm, as_input(g, targets));
  };
  // eps small enough that no relu preactivation is walked across its kink
  auto rep = grad_check<double>(named, build, 1e-6);
  CHECK(rep.max_rel_err < 1e-4);
}
