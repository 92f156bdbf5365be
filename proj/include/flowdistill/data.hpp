#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowdistill/rng.hpp"
#include "flowdistill/tensor.hpp"
#include "flowdistill/timeutil.hpp"

namespace fd::data {

// Raw traffic tensor with calendar metadata. values is [N, T, C], row-major,
// nonnegative flow counts per interval.
struct FlowSeries {
  Tensor values;
  timeutil::EpochMinutes start_time = 0;
  int interval_minutes = 30;
  std::vector<std::string> channels;
  int64_t missing_cells = 0;   // (region, interval) cells zero-filled at ingestion
  int64_t rejected_rows = 0;   // rows outside [start, start + T*interval)

  int64_t regions() const { return values.dim(0); }
  int64_t steps() const { return values.dim(1); }
  int64_t channel_count() const { return values.dim(2); }
};

struct RegionGraph {
  Tensor adjacency;  // [N, N], may be empty when only a grid/neighbor view exists
  std::vector<std::vector<int64_t>> neighbor_lists;
  int64_t grid_rows = 0;
  int64_t grid_cols = 0;
};

// Sidecar metadata for a flows.csv file (flat `key = value` text).
struct DatasetMeta {
  int64_t regions = 0;
  int interval_minutes = 30;
  timeutil::EpochMinutes start_time = 0;
  std::vector<std::string> channels;
  int64_t timesteps = 0;  // 0: infer from the data
  int64_t grid_rows = 0;
  int64_t grid_cols = 0;
  std::string adjacency_path;
  std::string city;
};

std::string meta_to_string(const DatasetMeta& meta);
DatasetMeta meta_from_string(const std::string& text);
DatasetMeta load_meta(const std::string& path);
void save_meta(const DatasetMeta& meta, const std::string& path);

// Dense ingestion: missing cells become 0 (counted); rows before start or at
///after step `timesteps` (when fixed by meta) are rejected (counted).
// Conflicting duplicate cells and unknown region ids are hard errors.
FlowSeries ingest_csv(const std::string& path, const DatasetMeta& meta);
void write_csv(const FlowSeries& series, const std::string& path);

struct CalendarFeatures {
  std::vector<int> tod;  // [T], in [0, t1)
  std::vector<int> dow;  // [T], Monday = 0
  int t1 = 0;
  int t2 = 7;
};
CalendarFeatures calendar_features(const FlowSeries& series);

// Window starts {0, stride, ...} with start + h_in + h_out <= T.
std::vector<int64_t> make_windows(int64_t total_steps, int64_t h_in, int64_t h_out,
                                  int64_t stride = 1);

struct SplitRatios {
  double train = 0.1;
  double val = 0.1;
  double test = 0.1;
};

struct Splits {
  std::vector<int64_t> train;
  std::vector<int64_t> val;
  std::vector<int64_t> test;
};

// Chronological split by window start; windows in an earlier split whose
// target range overlaps a later split's input range are dropped.
Splits chronological_split(const std::vector<int64_t>& windows, int64_t h_in, int64_t h_out,
                           const SplitRatios& ratios);

// Per-channel z-score statistics fit on training-window input values.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-6

  double apply_one(double x, int64_t c) const { return (x - mean[c]) / stddev[c]; }
  double invert_one(double z, int64_t c) const { return z * stddev[c] + mean[c]; }
  // Last tensor axis is the channel axis.
  Tensor apply(const Tensor& x) const;
  Tensor invert(const Tensor& x) const;
};

NormStats fit_normalizer(const FlowSeries& series, const std::vector<int64_t>& train_windows,
                         int64_t h_in);

// Top-K_r neighbors by adjacency weight (ties to the smaller region id);
// only strictly positive weights count as edges.
std::vector<std::vector<int64_t>> neighbor_lists_from_adjacency(const Tensor& adjacency,
                                                                int64_t k_r);
// 8-connected grid cells in row-major order, truncated to K_r.
std::vector<std::vector<int64_t>> neighbor_lists_from_grid(int64_t rows, int64_t cols, int64_t k_r);
// Literal-index fallback: region s's k-th neighbor is region s+k.
std::vector<std::vector<int64_t>> neighbor_lists_literal(int64_t n, int64_t k_r);

RegionGraph make_region_graph(Tensor adjacency, int64_t k_r);

struct SynthConfig {
  int64_t regions = 16;
  int64_t timesteps = 2000;
  int64_t channels = 1;
  int interval_minutes = 30;
  uint64_t seed = 1;
  double diurnal_amp = 0.6;      // a
  double weekend_factor = 0.75;  // w
  double mixing_rho = 0.3;       // spatial mixing in [0, 1)
  double noise_std = 3.0;
  double base_min = 35.0;  // base-rate draw range when base_rates is empty
  double base_max = 65.0;
  // per-region diurnal phase: shared seed-derived offset +- jitter radians,
  // so true fields stay spatially coherent under the neighbor regularizer
  double phase_jitter = 0.4;
  std::vector<double> base_rates;  // empty: drawn uniform [base_min, base_max) from seed
  timeutil::EpochMinutes start_time = timeutil::days_from_civil(2021, 1, 4) * 1440;  // a Monday
};

struct SynthTruth {
  std::vector<double> base_rates;
  std::vector<double> phases;  // per (region, channel)
  int64_t grid_rows = 0;
  int64_t grid_cols = 0;
};

struct SynthResult {
  FlowSeries series;
  RegionGraph graph;
  SynthTruth truth;
};

// Deterministic diurnal/weekend field with optional spatial mixing and
// Gaussian noise; a pure function of the config.
SynthResult generate_synthetic(const SynthConfig& cfg);

// rows x cols decomposition used when a synthetic region count must be laid
// out as a grid: the divisor pair closest to square.
std::pair<int64_t, int64_t> grid_dims_for(int64_t n);

enum class SplitTag { kTrain, kVal, kTest };

inline const char* split_tag_name(SplitTag t) {
  switch (t) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kVal: return "val";
    default: return "test";
  }
}

// Model-ready mini-batch: inputs normalized, targets in original units.
struct WindowBatch {
  Tensor inputs;   // [B, N, H_in, C]
  Tensor targets;  // [B, N, H_out, C], original units
  std::vector<int> tod_idx;  // [B * H_in]
  std::vector<int> dow_idx;  // [B * H_in]
  std::vector<int64_t> window_starts;
  SplitTag tag = SplitTag::kTrain;

  int64_t batch_size() const { return inputs.dim(0); }
};

WindowBatch assemble_batch(const FlowSeries& series, const CalendarFeatures& cal,
                           const NormStats& norm, const std::vector<int64_t>& starts,
                           int64_t h_in, int64_t h_out, SplitTag tag);

// Convenience bundle for file-backed datasets (flows.csv + meta.txt).
struct Dataset {
  FlowSeries series;
  DatasetMeta meta;
  CalendarFeatures cal;
  RegionGraph graph;
  std::string meta_bytes;  // exact meta text, hashed into teacher fingerprints
};

Dataset load_dataset(const std::string& dir, int64_t k_r);
Dataset dataset_from_synth(const SynthConfig& cfg, int64_t k_r);

}  // namespace fd::data
