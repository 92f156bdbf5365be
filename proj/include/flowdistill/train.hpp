#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowdistill/data.hpp"
#include "flowdistill/losses.hpp"
#include "flowdistill/model.hpp"
#include "flowdistill/teacher.hpp"

namespace fd::train {

struct TrainConfig {
  double lr0 = 0.0055;
  double decay = 0.6;
  int64_t decay_every = 5;  // epochs between decay steps
  int64_t batch_size = 80;
  int64_t max_epochs = 50;
  int64_t patience = 10;  // epochs without val improvement before stopping
  uint64_t seed = 1;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables
  bool deterministic_latent = false;  // w/o-IB mode: train with eps = 0
  losses::LossWeights weights;
  model::ModelConfig model;

  void validate() const {
    if (!(lr0 > 0)) throw ContractError("train config: lr0 must be > 0");
    if (!(decay > 0) || decay > 1) throw ContractError("train config: decay must be in (0, 1]");
    if (decay_every < 1) throw ContractError("train config: decay_every must be >= 1");
    if (batch_size < 1) throw ContractError("train config: batch_size must be >= 1");
    if (max_epochs < 1) throw ContractError("train config: max_epochs must be >= 1");
    if (patience < 0) throw ContractError("train config: patience must be >= 0");
    weights.validate();
    model.validate();
  }
};

// lr = lr0 * decay^floor(epoch / decay_every)
double lr_schedule(int64_t epoch, const TrainConfig& cfg);

struct AdamState {
  std::vector<std::pair<std::string, Tensor>> m;
  std::vector<std::pair<std::string, Tensor>> v;
  int64_t step = 0;
};

AdamState make_adam_state(const model::ParamSet& params);

// Bias-corrected Adam (beta1 0.9, beta2 0.999, stabilizer 1e-8).
// Throws NumericError naming the parameter on a non-finite gradient.
void optimizer_step(model::ParamSet& params, const std::map<std::string, Tensor>& grads,
                    AdamState& state, double lr);

// Scale all gradients by min(1, max_norm / ||g||_2) over the concatenation.
// Returns the pre-clip global norm.
double clip_gradients(std::map<std::string, Tensor>& grads, double max_norm);

struct Checkpoint {
  model::ModelConfig model_cfg;
  model::ParamSet params;
  AdamState adam;
  int64_t epoch = 0;  // epochs completed
  double best_val_mae = 0;
  uint64_t rng_shuffle_state = 0;
  uint64_t rng_eps_state = 0;
};

// Binary container: magic FDCK, u32 version, config block, named tensors
// (u16 name length, name, u8 ndim, u32 dims..., little-endian f32 payload).
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
// Rejects checkpoints whose dimensions disagree with the expected config.
Checkpoint load_checkpoint(const std::string& path, const model::ModelConfig& expect);

struct EpochLog {
  int64_t epoch = 0;
  double lr = 0;
  losses::LossBreakdown loss;  // sample-weighted mean over the epoch's batches
  double val_mae = 0;
  double val_rmse = 0;
};

std::string log_header();
std::string log_line(const EpochLog& e);

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  std::vector<EpochLog> log;
  bool aborted_non_finite = false;
  int64_t best_epoch = -1;
};

// Deterministic eval-mode inference over a window list, batched; returns
// denormalized predictions [W, N, H_out, C] alongside the original-unit
// targets.
struct PredictionSet {
  Tensor pred;
  Tensor target;
  std::vector<int64_t> window_starts;
};

PredictionSet predict_windows(const model::ParamSet& params, const data::FlowSeries& series,
                              const data::CalendarFeatures& cal, const data::NormStats& norm,
                              const std::vector<int64_t>& windows, data::SplitTag tag,
                              int64_t batch_size);

// One optimizer update from one batch. Exposed so tests can drive single
// steps; rejects batches that are not tagged as training data.
class Trainer {
 public:
  Trainer(const data::Dataset& dataset, const data::Splits& splits, const data::NormStats& norm,
          const teacher::TeacherPredictions* teacher, TrainConfig cfg);

  losses::LossBreakdown step(const data::WindowBatch& batch, double lr);
  TrainResult run();
  TrainResult resume(const Checkpoint& ckpt);

  const model::ParamSet& params() const { return params_; }

 private:
  TrainResult loop(int64_t start_epoch);
  Tensor teacher_slice(const std::vector<int64_t>& starts) const;
  std::pair<double, double> validation_metrics();

  const data::Dataset& dataset_;
  const data::Splits& splits_;
  const data::NormStats& norm_;
  const teacher::TeacherPredictions* teacher_;
  TrainConfig cfg_;
  model::ParamSet params_;
  AdamState adam_;
  SplitMix64 rng_shuffle_;
  SplitMix64 rng_eps_;
  std::map<int64_t, int64_t> teacher_row_;  // window start -> teacher row
};

// Convenience wrapper: fit normalizer, build teacher lookup, run the loop.
TrainResult run_training(const data::Dataset& dataset, const data::Splits& splits,
                  const data::NormStats& norm, const teacher::TeacherPredictions* teacher,
                  const TrainConfig& cfg);

}  // namespace fd::train
