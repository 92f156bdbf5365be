#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowdistill/data.hpp"
#include "flowdistill/tensor.hpp"

namespace fd::teacher {

// Window-aligned teacher predictions in original flow units, ordered like
// the training window list they were produced for.
struct TeacherPredictions {
  Tensor values;  // [W, N, H_out, C]
  uint64_t fingerprint = 0;

  int64_t window_count() const { return values.dim(0); }
  int64_t regions() const { return values.dim(1); }
  int64_t horizon() const { return values.dim(2); }
  int64_t channels() const { return values.dim(3); }
};

// Stable 64-bit FNV-1a over (meta bytes, split ratios, window starts);
// guards against silently misaligned teacher files.
uint64_t dataset_fingerprint(const std::string& meta_bytes, const data::SplitRatios& ratios,
                             const std::vector<int64_t>& window_starts);

// Binary container: magic FDTP, u32 version=1, u32 W, u32 N, u16 H_out,
// u16 C, u64 fingerprint, then W*N*H_out*C little-endian f32.
void save_predictions(const TeacherPredictions& preds, const std::string& path);

struct ExpectedDims {
  int64_t window_count;
  int64_t regions;
  int64_t h_out;
  int64_t channels;
};

TeacherPredictions load_predictions(const std::string& path, const ExpectedDims& expect,
                                    uint64_t expect_fingerprint);

struct OracleConfig {
  double noise_std = 0.0;  // sigma_T
  double bias = 0.0;
  uint64_t seed = 0;
};

// Synthetic teacher: Y + bias + N(0, sigma_T^2), clipped at zero. With
// noise_std = 0 and bias = 0 the teacher reproduces the targets exactly.
TeacherPredictions oracle_teacher(const Tensor& targets, const OracleConfig& cfg,
                                  uint64_t fingerprint);

// region id -> POI sentence. Flat CSV `region_id,description`.
using RegionInfo = std::map<int64_t, std::string>;
RegionInfo load_region_info(const std::string& path);

struct PromptOptions {
  int64_t h_in = 12;
  int64_t h_out = 12;
  int64_t region = 0;
  std::string city;  // empty: "the city"
};

// One UTF-8 instruction file per window (prompt_<window_start>.txt) in the
// two-block instruction format; requires the inflow/outflow channel pair.
// Returns the number of files written.
int64_t export_instruction_prompts(const data::FlowSeries& series,
                                   const std::vector<int64_t>& windows,
                                   const RegionInfo& region_info, const PromptOptions& opts,
                                   const std::string& out_dir);

}  // namespace fd::teacher
