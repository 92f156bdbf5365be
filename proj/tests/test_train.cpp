#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "flowdistill/train.hpp"

using namespace fd;
using namespace fd::train;

namespace {

struct Fixture {
  data::Dataset dataset;
  data::Splits splits;
  data::NormStats norm;
  teacher::TeacherPredictions teacher;
  TrainConfig cfg;
};

Fixture make_fixture(uint64_t seed, int64_t regions = 8, int64_t steps = 300, int64_t d = 8,
                     double train_ratio = 0.4) {
  Fixture f;
  data::SynthConfig synth;
  synth.regions = regions;
  synth.timesteps = steps;
  synth.seed = seed;
  f.dataset = data::dataset_from_synth(synth, 8);

  f.cfg.seed = seed;
  f.cfg.model.embed_dim = d;
  f.cfg.model.bottleneck = d;
  f.cfg.model.h_in = 6;
  f.cfg.model.h_out = 6;
  f.cfg.model.regions = regions;
  f.cfg.model.tod_slots = f.dataset.cal.t1;
  f.cfg.model.channels = 1;
  f.cfg.batch_size = 16;
  f.cfg.max_epochs = 3;
  f.cfg.patience = 10;
  f.cfg.weights.temporal_window = 4;

  auto windows = data::make_windows(steps, 6, 6);
  f.splits = data::chronological_split(windows, 6, 6, {train_ratio, 0.1, 0.1});
  f.norm = data::fit_normalizer(f.dataset.series, f.splits.train, 6);

  data::WindowBatch all = data::assemble_batch(f.dataset.series, f.dataset.cal, f.norm,
                                               f.splits.train, 6, 6, data::SplitTag::kTrain);
  const uint64_t fp =
      teacher::dataset_fingerprint(f.dataset.meta_bytes, {train_ratio, 0.1, 0.1}, f.splits.train);
  f.teacher = teacher::oracle_teacher(all.targets, {0.0, 0.0, seed + 1}, fp);
  return f;
}

std::string render_log(const TrainResult& r) {
  std::string out = log_header() + "\n";
  for (const auto& e : r.log) out += log_line(e) + "\n";
  return out;
}

}  // namespace

TEST_CASE("adam first step moves by about lr") {
  model::ModelConfig mc;
  mc.embed_dim = 1;
  mc.layers = 1;
  mc.bottleneck = 1;
  mc.h_in = 1;
  mc.h_out = 1;
  mc.regions = 1;
  mc.tod_slots = 1;
  mc.dow_slots = 1;
  mc.channels = 1;
  model::ParamSet params = model::init_params<float>(mc, 1);
  AdamState st = make_adam_state(params);

  std::map<std::string, Tensor> grads;
  for (auto& [name, t] : params.tensors) grads.emplace(name, Tensor::full(t.shape, 1.0f));
  model::ParamSet before = params;
  optimizer_step(params, grads, st, 0.1);
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    for (int64_t j = 0; j < params.tensors[i].second.numel(); ++j) {
      const double moved = static_cast<double>(before.tensors[i].second[j]) -
                           static_cast<double>(params.tensors[i].second[j]);
      CHECK(moved == doctest::Approx(0.1).epsilon(1e-6));
    }
  }

  // zero gradient: parameters unchanged
  model::ParamSet frozen = params;
  for (auto& [name, g] : grads) std::fill(g.values.begin(), g.values.end(), 0.0f);
  AdamState st0 = make_adam_state(params);
  optimizer_step(params, grads, st0, 0.1);
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    CHECK(params.tensors[i].second.values == frozen.tensors[i].second.values);
  }

  // non-finite gradient aborts with the parameter name
  grads.begin()->second[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(optimizer_step(params, grads, st0, 0.1),
                       doctest::Contains(grads.begin()->first.c_str()), NumericError);
}

TEST_CASE("adam is deterministic") {
  auto run = [&]() {
    model::ModelConfig mc;
    mc.embed_dim = 4;
    mc.layers = 2;
    mc.bottleneck = 4;
    mc.h_in = 2;
    mc.h_out = 2;
    mc.regions = 3;
    mc.tod_slots = 4;
    mc.channels = 1;
    model::ParamSet params = model::init_params<float>(mc, 5);
    AdamState st = make_adam_state(params);
    SplitMix64 rng(17);
    for (int step = 0; step < 7; ++step) {
      std::map<std::string, Tensor> grads;
      for (auto& [name, t] : params.tensors) {
        Tensor g(t.shape);
        rng.fill_uniform(g.data(), g.numel(), -1.0, 1.0);
        grads.emplace(name, std::move(g));
      }
      clip_gradients(grads, 5.0);
      optimizer_step(params, grads, st, 0.01);
    }
    return params;
  };
  model::ParamSet a = run();
  model::ParamSet b = run();
  for (size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(a.tensors[i].second.values == b.tensors[i].second.values);
  }
}

TEST_CASE("gradient clipping scales to the global norm") {
  std::map<std::string, Tensor> grads;
  grads.emplace("a", Tensor({2}, {3.0f, 0.0f}));
  grads.emplace("b", Tensor({1}, {4.0f}));
  const double norm = clip_gradients(grads, 5.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(grads.at("a")[0] == doctest::Approx(3.0f));  // at the boundary, no scaling

  grads.at("a")[0] = 30.0f;
  grads.at("b")[0] = 40.0f;
  const double norm2 = clip_gradients(grads, 5.0);
  CHECK(norm2 == doctest::Approx(50.0));
  CHECK(grads.at("a")[0] == doctest::Approx(3.0f));
  CHECK(grads.at("b")[0] == doctest::Approx(4.0f));
}

TEST_CASE("lr schedule follows the decay staircase") {
  TrainConfig cfg;
  cfg.decay_every = 5;
  CHECK(lr_schedule(0, cfg) == doctest::Approx(0.0055));
  CHECK(lr_schedule(4, cfg) == doctest::Approx(0.0055));
  CHECK(lr_schedule(5, cfg) == doctest::Approx(0.0033));
  CHECK(lr_schedule(10, cfg) == doctest::Approx(0.00198));

  TrainConfig flat = cfg;
  flat.decay = 1.0;
  CHECK(lr_schedule(40, flat) == doctest::Approx(0.0055));
  CHECK_THROWS_AS(lr_schedule(-1, cfg), ContractError);
}

TEST_CASE("patience zero runs exactly one epoch") {
  Fixture f = make_fixture(11);
  f.cfg.patience = 0;
  f.cfg.max_epochs = 10;
  TrainResult r = run_training(f.dataset, f.splits, f.norm, &f.teacher, f.cfg);
  CHECK(r.log.size() == 1);
}

TEST_CASE("fixed seed reproduces the epoch log bit-exactly") {
  Fixture f1 = make_fixture(21);
  TrainResult r1 = run_training(f1.dataset, f1.splits, f1.norm, &f1.teacher, f1.cfg);
  Fixture f2 = make_fixture(21);
  TrainResult r2 = run_training(f2.dataset, f2.splits, f2.norm, &f2.teacher, f2.cfg);
  CHECK(render_log(r1) == render_log(r2));
  REQUIRE(!r1.log.empty());
  CHECK(r1.log[0].loss.tbl_gate_open_fraction == 1.0);  // perfect oracle teacher
}

TEST_CASE("training reduces validation MAE on synthetic data") {
  data::SynthConfig synth;
  synth.regions = 16;
  synth.timesteps = 2000;
  synth.seed = 3;
  data::Dataset ds = data::dataset_from_synth(synth, 8);

  TrainConfig cfg;
  cfg.seed = 3;
  cfg.model.embed_dim = 16;
  cfg.model.bottleneck = 16;
  cfg.model.h_in = 12;
  cfg.model.h_out = 12;
  cfg.model.regions = 16;
  cfg.model.tod_slots = ds.cal.t1;
  cfg.model.channels = 1;
  cfg.batch_size = 80;
  cfg.max_epochs = 5;
  auto windows = data::make_windows(synth.timesteps, 12, 12);
  data::Splits splits = data::chronological_split(windows, 12, 12, {0.1, 0.1, 0.1});
  data::NormStats norm = data::fit_normalizer(ds.series, splits.train, 12);
  data::WindowBatch all =
      data::assemble_batch(ds.series, ds.cal, norm, splits.train, 12, 12, data::SplitTag::kTrain);
  teacher::TeacherPredictions tp = teacher::oracle_teacher(all.targets, {0.0, 0.0, 4}, 0);

  TrainResult r = run_training(ds, splits, norm, &tp, cfg);
  REQUIRE(r.log.size() >= 2);
  CHECK(r.log.back().val_mae < r.log.front().val_mae);
  CHECK(r.best.best_val_mae <= r.log.front().val_mae);
}

TEST_CASE("checkpoint round-trips bit-exactly and validates dims") {
  Fixture f = make_fixture(31);
  f.cfg.max_epochs = 1;
  TrainResult r = run_training(f.dataset, f.splits, f.norm, &f.teacher, f.cfg);

  auto dir = std::filesystem::temp_directory_path() / "fd_train_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "ck.fdck").string();
  save_checkpoint(r.last, path);
  Checkpoint back = load_checkpoint(path, f.cfg.model);

  REQUIRE(back.params.tensors.size() == r.last.params.tensors.size());
  for (size_t i = 0; i < back.params.tensors.size(); ++i) {
    CHECK(back.params.tensors[i].first == r.last.params.tensors[i].first);
    CHECK(back.params.tensors[i].second.values == r.last.params.tensors[i].second.values);
  }
  CHECK(back.adam.step == r.last.adam.step);
  CHECK(back.rng_eps_state == r.last.rng_eps_state);
  CHECK(back.best_val_mae == r.last.best_val_mae);
  for (size_t i = 0; i < back.adam.m.size(); ++i) {
    CHECK(back.adam.m[i].second.values == r.last.adam.m[i].second.values);
    CHECK(back.adam.v[i].second.values == r.last.adam.v[i].second.values);
  }

  model::ModelConfig other = f.cfg.model;
  other.embed_dim *= 2;
  CHECK_THROWS_WITH_AS(load_checkpoint(path, other), doctest::Contains("dimensions"), IoError);

  // corrupt header
  {
    std::ofstream bad(path, std::ios::binary | std::ios::trunc);
    bad << "FDXXjunk";
  }
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("resume from checkpoint matches the uninterrupted trajectory") {
  Fixture fa = make_fixture(41);
  fa.cfg.max_epochs = 3;
  TrainResult full = run_training(fa.dataset, fa.splits, fa.norm, &fa.teacher, fa.cfg);

  Fixture fb = make_fixture(41);
  fb.cfg.max_epochs = 2;
  TrainResult part = run_training(fb.dataset, fb.splits, fb.norm, &fb.teacher, fb.cfg);

  Fixture fc = make_fixture(41);
  fc.cfg.max_epochs = 1;
  Trainer resumed(fc.dataset, fc.splits, fc.norm, &fc.teacher, fc.cfg);
  TrainResult tail = resumed.resume(part.last);

  REQUIRE(full.log.size() == 3);
  REQUIRE(tail.log.size() == 1);
  CHECK(log_line(tail.log[0]) == log_line(full.log[2]));
  for (size_t i = 0; i < full.last.params.tensors.size(); ++i) {
    CHECK(tail.last.params.tensors[i].second.values == full.last.params.tensors[i].second.values);
  }
}

TEST_CASE("diverging loss aborts and keeps the last good checkpoint") {
  Fixture f = make_fixture(51);
  f.cfg.lr0 = 1e30;  // drives activations to overflow within an epoch or two
  f.cfg.max_epochs = 6;
  TrainResult r = run_training(f.dataset, f.splits, f.norm, &f.teacher, f.cfg);
  CHECK(r.aborted_non_finite);
  for (const auto& [name, t] : r.last.params.tensors) {
    for (float v : t.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("gradients are refused for batches tagged val or test") {
  Fixture f = make_fixture(61);
  Trainer trainer(f.dataset, f.splits, f.norm, &f.teacher, f.cfg);
  data::WindowBatch val = data::assemble_batch(f.dataset.series, f.dataset.cal, f.norm,
                                               f.splits.val, 6, 6, data::SplitTag::kVal);
  CHECK_THROWS_WITH_AS(trainer.step(val, 0.001), doctest::Contains("val"), ContractError);
}

TEST_CASE("teacher alignment is checked up front") {
  Fixture f = make_fixture(71);
  teacher::TeacherPredictions wrong = f.teacher;
  wrong.values = Tensor({2, 8, 6, 1});
  CHECK_THROWS_WITH_AS(Trainer(f.dataset, f.splits, f.norm, &wrong, f.cfg),
                       doctest::Contains("teacher"), ContractError);

  CHECK_THROWS_WITH_AS(Trainer(f.dataset, f.splits, f.norm, nullptr, f.cfg),
                       doctest::Contains("teacher required"), ContractError);

  // dropping the tbl term makes the teacher optional
  TrainConfig no_tbl = f.cfg;
  no_tbl.weights.lambda_tbl = 0.0;
  CHECK_NOTHROW(Trainer(f.dataset, f.splits, f.norm, nullptr, no_tbl));
}
