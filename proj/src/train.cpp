#include "flowdistill/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "flowdistill/errors.hpp"

namespace fd::train {

double lr_schedule(int64_t epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ContractError("lr_schedule: epoch must be >= 0");
  return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch / cfg.decay_every));
}

AdamState make_adam_state(const model::ParamSet& params) {
  AdamState st;
  for (const auto& [name, t] : params.tensors) {
    st.m.emplace_back(name, Tensor(t.shape));
    st.v.emplace_back(name, Tensor(t.shape));
  }
  return st;
}

double clip_gradients(std::map<std::string, Tensor>& grads, double max_norm) {
  long double sq = 0.0L;
  for (auto& [name, g] : grads) {
    for (float v : g.values) {
      if (!std::isfinite(v)) throw NumericError("gradient for '" + name + "' is non-finite");
      sq += static_cast<long double>(v) * static_cast<long double>(v);
    }
  }
  const double norm = std::sqrt(static_cast<double>(sq));
  if (max_norm > 0 && norm > max_norm) {
    const float scale = static_cast<float>(max_norm / norm);
    for (auto& [name, g] : grads) {
      for (float& v : g.values) v *= scale;
    }
  }
  return norm;
}

void optimizer_step(model::ParamSet& params, const std::map<std::string, Tensor>& grads,
                    AdamState& state, double lr) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));

  for (size_t i = 0; i < params.tensors.size(); ++i) {
    auto& [name, theta] = params.tensors[i];
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("optimizer_step: missing gradient for '" + name + "'");
    const Tensor& g = it->second;
    if (!g.same_shape(theta)) {
      throw ShapeError("optimizer_step: gradient shape " + shape_str(g.shape) + " vs param " +
                       shape_str(theta.shape) + " for '" + name + "'");
    }
    Tensor& m = state.m[i].second;
    Tensor& v = state.v[i].second;
    for (int64_t j = 0; j < theta.numel(); ++j) {
      const double gj = static_cast<double>(g[j]);
      if (!std::isfinite(gj)) throw NumericError("gradient for '" + name + "' is non-finite");
      const double mj = kBeta1 * static_cast<double>(m[j]) + (1.0 - kBeta1) * gj;
      const double vj = kBeta2 * static_cast<double>(v[j]) + (1.0 - kBeta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = lr * (mj / bc1) / (std::sqrt(vj / bc2) + kEps);
      theta[j] = static_cast<float>(static_cast<double>(theta[j]) - update);
    }
  }
}

// ---- checkpoint io ----

namespace {

constexpr char kMagic[4] = {'F', 'D', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u8(std::string& out, uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n) {
    if (pos + n > buf.size()) throw IoError(path + ": truncated checkpoint");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint8_t>(buf[pos]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

void put_named_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_u16(out, static_cast<uint16_t>(name.size()));
  out += name;
  put_u8(out, static_cast<uint8_t>(t.rank()));
  for (int64_t d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  for (float v : t.values) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
}

std::pair<std::string, Tensor> read_named_tensor(Reader& r) {
  const uint16_t len = r.u16();
  std::string name = r.str(len);
  const uint8_t ndim = r.u8();
  std::vector<int64_t> shape;
  for (int i = 0; i < ndim; ++i) shape.push_back(r.u32());
  Tensor t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) {
    const uint32_t bits = r.u32();
    float v;
    std::memcpy(&v, &bits, 4);
    t[i] = v;
  }
  return {std::move(name), std::move(t)};
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);

  const model::ModelConfig& m = ckpt.model_cfg;
  for (int64_t v : {m.embed_dim, m.layers, m.bottleneck, m.h_in, m.h_out, m.regions, m.tod_slots,
                    m.dow_slots, m.channels}) {
    put_u32(out, static_cast<uint32_t>(v));
  }
  put_u8(out, static_cast<uint8_t>(m.noise_mode));
  put_u8(out, static_cast<uint8_t>(m.eval_mode));
  put_u8(out, static_cast<uint8_t>(m.activation));

  put_u32(out, static_cast<uint32_t>(ckpt.epoch));
  put_u64(out, static_cast<uint64_t>(ckpt.adam.step));
  put_f64(out, ckpt.best_val_mae);
  put_u64(out, ckpt.rng_shuffle_state);
  put_u64(out, ckpt.rng_eps_state);

  put_u32(out, static_cast<uint32_t>(ckpt.params.tensors.size()));
  for (const auto& [name, t] : ckpt.params.tensors) put_named_tensor(out, "param." + name, t);
  put_u32(out, static_cast<uint32_t>(ckpt.adam.m.size()));
  for (const auto& [name, t] : ckpt.adam.m) put_named_tensor(out, "adam.m." + name, t);
  for (const auto& [name, t] : ckpt.adam.v) put_named_tensor(out, "adam.v." + name, t);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  Reader r{buf, 0, path};
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw IoError(path + ": bad magic, not a checkpoint");
  }
  r.pos = 4;
  const uint32_t version = r.u32();
  if (version != kVersion) throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  model::ModelConfig& m = ckpt.model_cfg;
  m.embed_dim = r.u32();
  m.layers = r.u32();
  m.bottleneck = r.u32();
  m.h_in = r.u32();
  m.h_out = r.u32();
  m.regions = r.u32();
  m.tod_slots = r.u32();
  m.dow_slots = r.u32();
  m.channels = r.u32();
  m.noise_mode = static_cast<model::NoiseMode>(r.u8());
  m.eval_mode = static_cast<model::EvalMode>(r.u8());
  m.activation = static_cast<model::Activation>(r.u8());

  ckpt.epoch = r.u32();
  ckpt.adam.step = static_cast<int64_t>(r.u64());
  ckpt.best_val_mae = r.f64();
  ckpt.rng_shuffle_state = r.u64();
  ckpt.rng_eps_state = r.u64();

  ckpt.params.cfg = m;
  const uint32_t n_params = r.u32();
  for (uint32_t i = 0; i < n_params; ++i) {
    auto [name, t] = read_named_tensor(r);
    if (name.rfind("param.", 0) != 0) throw IoError(path + ": unexpected tensor '" + name + "'");
    ckpt.params.tensors.emplace_back(name.substr(6), std::move(t));
  }
  const uint32_t n_moments = r.u32();
  for (uint32_t i = 0; i < n_moments; ++i) {
    auto [name, t] = read_named_tensor(r);
    if (name.rfind("adam.m.", 0) != 0) throw IoError(path + ": unexpected tensor '" + name + "'");
    ckpt.adam.m.emplace_back(name.substr(7), std::move(t));
  }
  for (uint32_t i = 0; i < n_moments; ++i) {
    auto [name, t] = read_named_tensor(r);
    if (name.rfind("adam.v.", 0) != 0) throw IoError(path + ": unexpected tensor '" + name + "'");
    ckpt.adam.v.emplace_back(name.substr(7), std::move(t));
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, const model::ModelConfig& expect) {
  Checkpoint ckpt = load_checkpoint(path);
  const model::ModelConfig& m = ckpt.model_cfg;
  if (m.embed_dim != expect.embed_dim || m.layers != expect.layers ||
      m.bottleneck != expect.bottleneck || m.h_in != expect.h_in || m.h_out != expect.h_out ||
      m.regions != expect.regions || m.tod_slots != expect.tod_slots ||
      m.dow_slots != expect.dow_slots || m.channels != expect.channels) {
    throw IoError(path + ": checkpoint dimensions do not match the expected model config");
  }
  return ckpt;
}

std::string log_header() {
  return "epoch,lr,reg,tbl,kl,spa,tem,total,gate_open_frac,val_mae,val_rmse";
}

std::string log_line(const EpochLog& e) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                static_cast<long long>(e.epoch), e.lr, e.loss.reg, e.loss.tbl, e.loss.kl,
                e.loss.spa, e.loss.tem, e.loss.total, e.loss.tbl_gate_open_fraction, e.val_mae,
                e.val_rmse);
  return buf;
}

PredictionSet predict_windows(const model::ParamSet& params, const data::FlowSeries& series,
                              const data::CalendarFeatures& cal, const data::NormStats& norm,
                              const std::vector<int64_t>& windows, data::SplitTag tag,
                              int64_t batch_size) {
  const model::ModelConfig& cfg = params.cfg;
  const int64_t w = static_cast<int64_t>(windows.size());

  // normalization round-trip probe before any metric-bearing inference
  for (int64_t ch = 0; ch < series.channel_count(); ++ch) {
    const double probe = static_cast<double>(series.values[ch]);
    const double rt = norm.invert_one(norm.apply_one(probe, ch), ch);
    if (std::abs(rt - probe) > 1e-5 * std::max(1.0, std::abs(probe))) {
      throw NumericError("normalization round-trip failed for channel " + std::to_string(ch));
    }
  }

  PredictionSet out;
  out.window_starts = windows;
  out.pred = Tensor({w, cfg.regions, cfg.h_out, cfg.channels});
  out.target = Tensor({w, cfg.regions, cfg.h_out, cfg.channels});

  for (int64_t at = 0; at < w; at += batch_size) {
    const int64_t take = std::min(batch_size, w - at);
    std::vector<int64_t> starts(windows.begin() + at, windows.begin() + at + take);
    data::WindowBatch batch =
        data::assemble_batch(series, cal, norm, starts, cfg.h_in, cfg.h_out, tag);
    Graph g;
    auto bound = model::bind_params(g, params);
    auto fwd = model::forward(g, bound, cfg, g.input(batch.inputs), model::batch_indices(batch, cfg), -1);
    NodeId denorm = losses::build_denormalize(g, fwd.pred_norm, norm);
    const Tensor& pred = g.value(denorm);
    const int64_t per = cfg.regions * cfg.h_out * cfg.channels;
    std::copy(pred.values.begin(), pred.values.end(), out.pred.values.begin() + at * per);
    std::copy(batch.targets.values.begin(), batch.targets.values.end(),
              out.target.values.begin() + at * per);
  }
  return out;
}

// ---- trainer ----

Trainer::Trainer(const data::Dataset& dataset, const data::Splits& splits,
                 const data::NormStats& norm, const teacher::TeacherPredictions* teacher,
                 TrainConfig cfg)
    : dataset_(dataset),
      splits_(splits),
      norm_(norm),
      teacher_(teacher),
      cfg_(std::move(cfg)),
      rng_shuffle_(cfg_.seed, streams::kShuffle),
      rng_eps_(cfg_.seed, streams::kLatentEps) {
  cfg_.validate();
  const bool want_teacher = cfg_.weights.use_tbl && cfg_.weights.lambda_tbl > 0;
  if (want_teacher && teacher_ == nullptr) {
    throw ContractError("train: teacher required when lambda_tbl > 0");
  }
  if (teacher_) {
    if (teacher_->regions() != cfg_.model.regions || teacher_->horizon() != cfg_.model.h_out ||
        teacher_->channels() != cfg_.model.channels ||
        teacher_->window_count() != static_cast<int64_t>(splits_.train.size())) {
      throw ContractError("train: teacher dimensions do not match the training split");
    }
    for (size_t i = 0; i < splits_.train.size(); ++i) {
      teacher_row_[splits_.train[i]] = static_cast<int64_t>(i);
    }
  }
  params_ = model::init_params<float>(cfg_.model, cfg_.seed);
  adam_ = make_adam_state(params_);
}

Tensor Trainer::teacher_slice(const std::vector<int64_t>& starts) const {
  const model::ModelConfig& m = cfg_.model;
  Tensor out({static_cast<int64_t>(starts.size()), m.regions, m.h_out, m.channels});
  const int64_t per = m.regions * m.h_out * m.channels;
  for (size_t i = 0; i < starts.size(); ++i) {
    auto it = teacher_row_.find(starts[i]);
    if (it == teacher_row_.end()) {
      throw ContractError("train: no teacher row for window " + std::to_string(starts[i]));
    }
    const float* src = teacher_->values.data() + it->second * per;
    std::copy(src, src + per, out.values.begin() + static_cast<int64_t>(i) * per);
  }
  return out;
}

losses::LossBreakdown Trainer::step(const data::WindowBatch& batch, double lr) {
  if (batch.tag != data::SplitTag::kTrain) {
    throw ContractError("train: refusing gradients from a batch tagged '" +
                        std::string(data::split_tag_name(batch.tag)) + "'");
  }
  const model::ModelConfig& m = cfg_.model;
  Graph g;
  auto bound = model::bind_params(g, params_);
  NodeId eps = -1;
  if (!cfg_.deterministic_latent) {
    Tensor noise({batch.batch_size(), m.regions, m.h_in, m.bottleneck});
    rng_eps_.fill_gaussian(noise.data(), noise.numel());
    eps = g.input(std::move(noise));
  }
  auto fwd = model::forward(g, bound, m, g.input(batch.inputs), model::batch_indices(batch, m), eps);
  NodeId pred_orig = losses::build_denormalize(g, fwd.pred_norm, norm_);

  NodeId teacher_node = -1;
  if (teacher_ && cfg_.weights.use_tbl && cfg_.weights.lambda_tbl > 0) {
    teacher_node = g.input(teacher_slice(batch.window_starts));
  }
  auto loss = losses::build_total(g, pred_orig, teacher_node, g.input(batch.targets), fwd.latent,
                                  cfg_.weights, dataset_.graph.neighbor_lists);
  losses::LossBreakdown breakdown = loss.values(g, cfg_.weights);
  if (!std::isfinite(breakdown.total)) {
    throw NumericError("train: non-finite loss");
  }

  auto raw = g.backward(loss.total);
  std::map<std::string, Tensor> grads;
  for (const auto& [name, id] : bound.ids) grads.emplace(name, std::move(raw.at(id)));
  clip_gradients(grads, cfg_.clip_norm);
  optimizer_step(params_, grads, adam_, lr);
  return breakdown;
}

std::pair<double, double> Trainer::validation_metrics() {
  PredictionSet val = predict_windows(params_, dataset_.series, dataset_.cal, norm_, splits_.val,
                                      data::SplitTag::kVal, cfg_.batch_size);
  long double abs_acc = 0.0L, sq_acc = 0.0L;
  for (int64_t i = 0; i < val.pred.numel(); ++i) {
    const double d = static_cast<double>(val.pred[i]) - static_cast<double>(val.target[i]);
    abs_acc += std::abs(d);
    sq_acc += d * d;
  }
  const double n = static_cast<double>(val.pred.numel());
  return {static_cast<double>(abs_acc / n), std::sqrt(static_cast<double>(sq_acc / n))};
}

TrainResult Trainer::run() { return loop(0); }

TrainResult Trainer::resume(const Checkpoint& ckpt) {
  const model::ModelConfig& m = ckpt.model_cfg;
  if (m.embed_dim != cfg_.model.embed_dim || m.regions != cfg_.model.regions ||
      m.layers != cfg_.model.layers || m.bottleneck != cfg_.model.bottleneck ||
      m.channels != cfg_.model.channels) {
    throw ContractError("resume: checkpoint does not match the configured model");
  }
  params_ = ckpt.params;
  adam_ = ckpt.adam;
  rng_shuffle_.set_state(ckpt.rng_shuffle_state);
  rng_eps_.set_state(ckpt.rng_eps_state);
  return loop(ckpt.epoch);
}

TrainResult Trainer::loop(int64_t start_epoch) {
  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  int64_t epochs_since_improve = 0;

  auto snapshot = [&](int64_t epoch, double best) {
    Checkpoint c;
    c.model_cfg = cfg_.model;
    c.params = params_;
    c.adam = adam_;
    c.epoch = epoch;
    c.best_val_mae = best;
    c.rng_shuffle_state = rng_shuffle_.state();
    c.rng_eps_state = rng_eps_.state();
    return c;
  };
  result.last = snapshot(start_epoch, best_val);

  for (int64_t epoch = start_epoch; epoch < start_epoch + cfg_.max_epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg_);
    std::vector<int64_t> order = splits_.train;
    rng_shuffle_.shuffle(order);

    losses::LossBreakdown epoch_loss;
    int64_t seen = 0;
    for (int64_t at = 0; at < static_cast<int64_t>(order.size()); at += cfg_.batch_size) {
      const int64_t take =
          std::min<int64_t>(cfg_.batch_size, static_cast<int64_t>(order.size()) - at);
      std::vector<int64_t> starts(order.begin() + at, order.begin() + at + take);
      data::WindowBatch batch = data::assemble_batch(
          dataset_.series, dataset_.cal, norm_, starts, cfg_.model.h_in, cfg_.model.h_out,
          data::SplitTag::kTrain);
      losses::LossBreakdown b;
      try {
        b = step(batch, lr);
      } catch (const NumericError&) {
        result.aborted_non_finite = true;
        return result;
      }
      const double wgt = static_cast<double>(take);
      epoch_loss.reg += b.reg * wgt;
      epoch_loss.tbl += b.tbl * wgt;
      epoch_loss.kl += b.kl * wgt;
      epoch_loss.spa += b.spa * wgt;
      epoch_loss.tem += b.tem * wgt;
      epoch_loss.total += b.total * wgt;
      epoch_loss.tbl_gate_open_fraction += b.tbl_gate_open_fraction * wgt;
      seen += take;
    }
    const double inv = 1.0 / static_cast<double>(seen);
    epoch_loss.reg *= inv;
    epoch_loss.tbl *= inv;
    epoch_loss.kl *= inv;
    epoch_loss.spa *= inv;
    epoch_loss.tem *= inv;
    epoch_loss.total *= inv;
    epoch_loss.tbl_gate_open_fraction *= inv;

    auto [val_mae, val_rmse] = validation_metrics();
    if (!std::isfinite(val_mae)) {
      result.aborted_non_finite = true;
      return result;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.loss = epoch_loss;
    entry.val_mae = val_mae;
    entry.val_rmse = val_rmse;
    result.log.push_back(entry);

    if (val_mae < best_val) {
      best_val = val_mae;
      epochs_since_improve = 0;
      result.best = snapshot(epoch + 1, best_val);
      result.best_epoch = epoch;
    } else {
      ++epochs_since_improve;
    }
    result.last = snapshot(epoch + 1, best_val);

    if (epochs_since_improve >= cfg_.patience) break;
  }
  if (result.best_epoch < 0) result.best = result.last;
  return result;
}

TrainResult run_training(const data::Dataset& dataset, const data::Splits& splits,
                  const data::NormStats& norm, const teacher::TeacherPredictions* teacher,
                  const TrainConfig& cfg) {
  Trainer trainer(dataset, splits, norm, teacher, cfg);
  return trainer.run();
}

}  // namespace fd::train
