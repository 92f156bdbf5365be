#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "flowdistill/eval.hpp"

using namespace fd;
using namespace fd::eval;

TEST_CASE("metric hand values and Jensen inequality") {
  Tensor pred({3}, {2, 2, 5});
  Tensor target({3}, {1, 2, 3});
  Metrics m = compute_metrics(pred, target);
  CHECK(std::abs(m.mae - 1.0) < 1e-9);
  CHECK(std::abs(m.rmse - std::sqrt(5.0 / 3.0)) < 1e-9);

  Metrics zero = compute_metrics(pred, pred);
  CHECK(zero.mae == 0.0);
  CHECK(zero.rmse == 0.0);

  SplitMix64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    Tensor a({5});
    Tensor b({5});
    rng.fill_uniform(a.data(), 5, -20.0, 20.0);
    rng.fill_uniform(b.data(), 5, -20.0, 20.0);
    Metrics r = compute_metrics(a, b);
    CHECK(r.rmse >= r.mae - 1e-12);
  }
}

TEST_CASE("horizon breakdown and aggregation identity") {
  const int64_t w = 3, n = 2, h = 4, c = 1;
  Tensor pred({w, n, h, c});
  Tensor target({w, n, h, c});
  SplitMix64 rng(5);
  rng.fill_uniform(pred.data(), pred.numel(), 0.0, 10.0);
  rng.fill_uniform(target.data(), target.numel(), 0.0, 10.0);

  auto steps = horizon_breakdown(pred, target);
  REQUIRE(steps.size() == static_cast<size_t>(h));

  // count-weighted mean of per-horizon MAE equals the overall MAE
  double acc = 0;
  int64_t total = 0;
  for (const Metrics& m : steps) {
    acc += m.mae * static_cast<double>(m.count);
    total += m.count;
  }
  Metrics overall = compute_metrics(pred, target);
  CHECK(acc / static_cast<double>(total) == doctest::Approx(overall.mae).epsilon(1e-6));

  // constant error field: identical metrics at every step
  Tensor cpred = target;
  for (auto& v : cpred.values) v += 2.0f;
  auto csteps = horizon_breakdown(cpred, target);
  for (const Metrics& m : csteps) {
    CHECK(m.mae == doctest::Approx(2.0));
    CHECK(m.rmse == doctest::Approx(2.0));
  }

  // error only at the last step: zeros elsewhere
  Tensor lpred = target;
  for (int64_t wi = 0; wi < w; ++wi) {
    for (int64_t r = 0; r < n; ++r) lpred.at(wi, r, h - 1, 0) += 3.0f;
  }
  auto lsteps = horizon_breakdown(lpred, target);
  for (int64_t t = 0; t < h - 1; ++t) CHECK(lsteps[static_cast<size_t>(t)].mae == 0.0);
  CHECK(lsteps.back().mae == doctest::Approx(3.0));
}

TEST_CASE("volume buckets") {
  const int64_t w = 2, n = 16, h = 2, c = 1;
  Tensor target({w, n, h, c});
  // distinct region levels 10, 20, ..., 160
  for (int64_t wi = 0; wi < w; ++wi) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t t = 0; t < h; ++t) target.at(wi, r, t, 0) = static_cast<float>(10 * (r + 1));
    }
  }
  Tensor pred = target;
  for (auto& v : pred.values) v += 1.0f;

  // one bucket covering everything equals the overall metrics
  auto one = volume_bucket_breakdown(pred, target, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0].metrics.mae == doctest::Approx(compute_metrics(pred, target).mae));

  // quartile edges put 4 regions in each bucket
  auto edges = quartile_edges(target);
  REQUIRE(edges.size() == 3);
  auto buckets = volume_bucket_breakdown(pred, target, edges);
  REQUIRE(buckets.size() == 4);
  for (const auto& b : buckets) {
    CHECK(b.metrics.count == w * 4 * h * c);
  }

  // an empty bucket reports count 0 and no metrics
  auto sparse = volume_bucket_breakdown(pred, target, {1.0, 5.0});
  CHECK(sparse[0].metrics.count == 0);  // nothing below 1.0
  CHECK(sparse[1].metrics.count == 0);  // nothing in [1, 5)
  CHECK(sparse[2].metrics.count == pred.numel());

  CHECK_THROWS_AS(volume_bucket_breakdown(pred, target, {5.0, 5.0}), ContractError);
}

TEST_CASE("roughness diagnostics") {
  Tensor flat = Tensor::full({2, 4, 5, 1}, 7.0f);
  auto nbrs = data::neighbor_lists_from_grid(2, 2, 8);
  CHECK(spatial_roughness(flat, nbrs) == 0.0);
  CHECK(temporal_roughness(flat) == 0.0);

  // alternating +-1 series: every step jumps by 2
  Tensor alt({1, 1, 6, 1});
  for (int64_t t = 0; t < 6; ++t) alt.at(0, 0, t, 0) = (t % 2 == 0) ? 1.0f : -1.0f;
  CHECK(temporal_roughness(alt) == doctest::Approx(2.0));

  // shift invariance
  Tensor shifted = alt;
  for (auto& v : shifted.values) v += 40.0f;
  CHECK(temporal_roughness(shifted) == doctest::Approx(2.0));

  SplitMix64 rng(3);
  Tensor rough({2, 4, 5, 1});
  rng.fill_uniform(rough.data(), rough.numel(), 0.0, 10.0);
  Tensor rough_shift = rough;
  for (auto& v : rough_shift.values) v += 5.0f;
  CHECK(spatial_roughness(rough_shift, nbrs) == doctest::Approx(spatial_roughness(rough, nbrs)));
}

namespace {

train::TrainConfig small_train_config(const data::Dataset& ds) {
  train::TrainConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.bottleneck = 8;
  cfg.model.h_in = 6;
  cfg.model.h_out = 6;
  cfg.model.regions = ds.series.regions();
  cfg.model.tod_slots = ds.cal.t1;
  cfg.model.channels = 1;
  cfg.batch_size = 32;
  cfg.max_epochs = 2;
  cfg.patience = 5;
  cfg.weights.temporal_window = 4;
  return cfg;
}

}  // namespace

TEST_CASE("sweep produces a row per (ratio, seed) deterministically") {
  data::SynthConfig synth;
  synth.regions = 4;
  synth.timesteps = 220;
  synth.seed = 9;
  data::Dataset ds = data::dataset_from_synth(synth, 8);
  train::TrainConfig cfg = small_train_config(ds);

  SweepOptions opts;
  opts.ratios = {0.2, 0.4};
  opts.seeds = {1, 2};
  SweepResult a = training_ratio_sweep(ds, cfg, opts);
  CHECK(a.rows.size() == 4);
  CHECK(a.summary.size() == 2);
  SweepResult b = training_ratio_sweep(ds, cfg, opts);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mae == b.rows[i].mae);
    CHECK(a.rows[i].rmse == b.rows[i].rmse);
  }
  CHECK_THROWS_AS(training_ratio_sweep(ds, cfg, {{1.5}, {1}, 0, 0, false, 0.1, 0.1}),
                  ContractError);
}

TEST_CASE("ablation suite emits the five named variants") {
  data::SynthConfig synth;
  synth.regions = 4;
  synth.timesteps = 160;
  synth.seed = 10;
  data::Dataset ds = data::dataset_from_synth(synth, 8);
  train::TrainConfig cfg = small_train_config(ds);
  cfg.max_epochs = 1;

  AblationOptions opts;
  opts.seeds = {1};
  opts.train_ratio = 0.4;
  auto rows = ablation_suite(ds, cfg, opts);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].name == "full");
  CHECK(rows[1].name == "w/o-TB");
  CHECK(rows[2].name == "w/o-IB");
  CHECK(rows[3].name == "w/o-SC");
  CHECK(rows[4].name == "w/o-TC");
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.mae));
    CHECK(r.spatial_tv >= 0.0);
  }
}

TEST_CASE("repetitions=1 flags an unstable benchmark") {
  BenchOptions opts;
  opts.base_regions = 4;
  opts.timesteps = 80;
  opts.repetitions = 1;
  opts.model_template = train::TrainConfig{};
  opts.model_template.model.embed_dim = 4;
  opts.model_template.model.bottleneck = 4;
  opts.model_template.model.h_in = 4;
  opts.model_template.model.h_out = 4;
  opts.model_template.batch_size = 16;
  BenchResult r = scaling_benchmark(opts);
  CHECK(r.unstable);
  CHECK(r.size_rows.size() == 5);
  CHECK(r.region_rows.size() == 3);
  CHECK(r.timer_resolution_ns > 0.0);
  for (const auto& row : r.size_rows) CHECK(row.median_seconds > 0.0);
}

TEST_CASE("report writers emit parseable artifacts") {
  auto dir = std::filesystem::temp_directory_path() / "fd_eval_test";
  std::filesystem::create_directories(dir);

  Tensor pred({2, 4, 3, 1});
  Tensor target({2, 4, 3, 1});
  SplitMix64 rng(1);
  rng.fill_uniform(pred.data(), pred.numel(), 0.0, 10.0);
  rng.fill_uniform(target.data(), target.numel(), 0.0, 10.0);
  MetricReport report = full_report(pred, target);

  const std::string csv = (dir / "report.csv").string();
  write_metric_report_csv(report, csv);
  std::ifstream f(csv);
  std::string first;
  std::getline(f, first);
  CHECK(first == "section,key,mae,rmse,count");

  const std::string jpath = (dir / "report.json").string();
  write_report_json("evaluate", "seed = 1\n", metric_report_rows_json(report), jpath);
  std::ifstream jf(jpath);
  nlohmann::json doc = nlohmann::json::parse(jf);
  CHECK(doc["kind"] == "evaluate");
  CHECK(doc["rows"].is_array());
  CHECK(doc["environment"]["timer"]["resolution_ns"].is_number());
  CHECK(doc["environment"]["build"]["openmp_max_threads"].is_number());
}
