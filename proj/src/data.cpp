#include "flowdistill/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "flowdistill/errors.hpp"

namespace fd::data {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ',')) {
    field = trim(field);
    if (!field.empty()) out.push_back(field);
  }
  return out;
}

int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad integer for " + what + ": '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad number for " + what + ": '" + s + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string meta_to_string(const DatasetMeta& meta) {
  std::ostringstream os;
  os << "regions = " << meta.regions << "\n";
  os << "interval_minutes = " << meta.interval_minutes << "\n";
  os << "start_time = " << timeutil::format_rfc3339(meta.start_time) << "\n";
  os << "channels = ";
  for (size_t i = 0; i < meta.channels.size(); ++i) {
    if (i) os << ",";
    os << meta.channels[i];
  }
  os << "\n";
  if (meta.timesteps > 0) os << "timesteps = " << meta.timesteps << "\n";
  if (meta.grid_rows > 0) os << "grid_rows = " << meta.grid_rows << "\n";
  if (meta.grid_cols > 0) os << "grid_cols = " << meta.grid_cols << "\n";
  if (!meta.adjacency_path.empty()) os << "adjacency_path = " << meta.adjacency_path << "\n";
  if (!meta.city.empty()) os << "city = " << meta.city << "\n";
  return os.str();
}

DatasetMeta meta_from_string(const std::string& text) {
  DatasetMeta meta;
  bool saw_regions = false, saw_channels = false;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("meta: malformed line '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "regions") {
      meta.regions = parse_int(val, key);
      saw_regions = true;
    } else if (key == "interval_minutes") {
      meta.interval_minutes = static_cast<int>(parse_int(val, key));
    } else if (key == "start_time") {
      meta.start_time = timeutil::parse_rfc3339(val);
    } else if (key == "channels") {
      meta.channels = split_list(val);
      saw_channels = true;
    } else if (key == "timesteps") {
      meta.timesteps = parse_int(val, key);
    } else if (key == "grid_rows") {
      meta.grid_rows = parse_int(val, key);
    } else if (key == "grid_cols") {
      meta.grid_cols = parse_int(val, key);
    } else if (key == "adjacency_path") {
      meta.adjacency_path = val;
    } else if (key == "city") {
      meta.city = val;
    } else {
      throw IoError("meta: unknown key '" + key + "'");
    }
  }
  if (!saw_regions || meta.regions <= 0) throw IoError("meta: missing or bad 'regions'");
  if (!saw_channels || meta.channels.empty()) throw IoError("meta: missing 'channels'");
  if (meta.interval_minutes <= 0 || 1440 % meta.interval_minutes != 0) {
    throw IoError("meta: interval_minutes must divide 1440");
  }
  return meta;
}

DatasetMeta load_meta(const std::string& path) { return meta_from_string(read_file(path)); }

void save_meta(const DatasetMeta& meta, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << meta_to_string(meta);
}

FlowSeries ingest_csv(const std::string& path, const DatasetMeta& meta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  const int64_t n = meta.regions;
  const int64_t c = static_cast<int64_t>(meta.channels.size());

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() != static_cast<size_t>(2 + c) || header[0] != "region_id" ||
      header[1] != "timestamp") {
    throw IoError(path + ": expected header region_id,timestamp," +
                  std::to_string(c) + " channel column(s)");
  }

  struct Row {
    int64_t region;
    int64_t t;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
  int64_t rejected = 0;
  int64_t max_t = -1;
  int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != static_cast<size_t>(2 + c)) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(2 + c) +
                    " fields, got " + std::to_string(fields.size()));
    }
    const int64_t region = parse_int(fields[0], "region_id");
    if (region < 0 || region >= n) {
      throw IoError(path + ":" + std::to_string(line_no) + ": unknown region id " +
                    std::to_string(region) + " (regions = " + std::to_string(n) + ")");
    }
    const timeutil::EpochMinutes ts = timeutil::parse_rfc3339(fields[1]);
    const int64_t minutes = ts - meta.start_time;
    if (minutes < 0) {
      ++rejected;
      continue;
    }
    const int64_t t = minutes / meta.interval_minutes;
    if (meta.timesteps > 0 && t >= meta.timesteps) {
      ++rejected;
      continue;
    }
    Row r{region, t, {}};
    r.vals.reserve(static_cast<size_t>(c));
    for (int64_t j = 0; j < c; ++j) {
      const double v = parse_double(fields[static_cast<size_t>(2 + j)], meta.channels[j]);
      if (v < 0.0) {
        throw IoError(path + ":" + std::to_string(line_no) + ": negative flow value " +
                      fields[static_cast<size_t>(2 + j)]);
      }
      r.vals.push_back(v);
    }
    max_t = std::max(max_t, t);
    rows.push_back(std::move(r));
  }

  const int64_t total_steps = meta.timesteps > 0 ? meta.timesteps : max_t + 1;
  if (total_steps <= 0) throw IoError(path + ": no usable rows");

  FlowSeries series;
  series.values = Tensor({n, total_steps, c});
  series.start_time = meta.start_time;
  series.interval_minutes = meta.interval_minutes;
  series.channels = meta.channels;
  series.rejected_rows = rejected;

  std::vector<uint8_t> seen(static_cast<size_t>(n * total_steps), 0);
  for (const Row& r : rows) {
    const size_t cell = static_cast<size_t>(r.region * total_steps + r.t);
    float* dst = &series.values.at(r.region, r.t, 0);
    if (seen[cell]) {
      for (int64_t j = 0; j < c; ++j) {
        if (dst[j] != static_cast<float>(r.vals[static_cast<size_t>(j)])) {
          throw IoError(path + ": conflicting duplicate cell (region " + std::to_string(r.region) +
                        ", step " + std::to_string(r.t) + ")");
        }
      }
      continue;
    }
    seen[cell] = 1;
    for (int64_t j = 0; j < c; ++j) dst[j] = static_cast<float>(r.vals[static_cast<size_t>(j)]);
  }
  series.missing_cells =
      static_cast<int64_t>(std::count(seen.begin(), seen.end(), static_cast<uint8_t>(0)));
  return series;
}

void write_csv(const FlowSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "region_id,timestamp";
  for (const auto& ch : series.channels) out << "," << ch;
  out << "\n";
  char buf[32];
  for (int64_t s = 0; s < series.regions(); ++s) {
    for (int64_t t = 0; t < series.steps(); ++t) {
      out << s << "," << timeutil::format_rfc3339(series.start_time + t * series.interval_minutes);
      for (int64_t c = 0; c < series.channel_count(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(series.values.at(s, t, c)));
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

CalendarFeatures calendar_features(const FlowSeries& series) {
  if (series.interval_minutes <= 0 || 1440 % series.interval_minutes != 0) {
    throw ContractError("calendar_features: interval must divide 1440");
  }
  CalendarFeatures cal;
  cal.t1 = 1440 / series.interval_minutes;
  cal.t2 = 7;
  const int64_t total = series.steps();
  cal.tod.resize(static_cast<size_t>(total));
  cal.dow.resize(static_cast<size_t>(total));
  for (int64_t t = 0; t < total; ++t) {
    const timeutil::EpochMinutes at = series.start_time + t * series.interval_minutes;
    cal.tod[static_cast<size_t>(t)] = timeutil::minute_of_day(at) / series.interval_minutes;
    cal.dow[static_cast<size_t>(t)] = timeutil::weekday(at);
  }
  return cal;
}

std::vector<int64_t> make_windows(int64_t total_steps, int64_t h_in, int64_t h_out,
                                  int64_t stride) {
  if (h_in < 1 || h_out < 1 || stride < 1) throw ContractError("make_windows: bad window sizes");
  if (total_steps < h_in + h_out) {
    throw ContractError("make_windows: need T >= H_in + H_out, got T=" +
                        std::to_string(total_steps) + ", H_in+H_out=" +
                        std::to_string(h_in + h_out));
  }
  std::vector<int64_t> starts;
  for (int64_t s = 0; s + h_in + h_out <= total_steps; s += stride) starts.push_back(s);
  return starts;
}

namespace {

// Drop earlier-split windows whose target range overlaps any later input range.
std::vector<int64_t> drop_leaky(const std::vector<int64_t>& earlier,
                                const std::vector<const std::vector<int64_t>*>& later, int64_t h_in,
                                int64_t h_out) {
  std::vector<int64_t> kept;
  for (int64_t s : earlier) {
    const int64_t tgt_lo = s + h_in;
    const int64_t tgt_hi = s + h_in + h_out;
    bool leaks = false;
    for (const auto* lst : later) {
      for (int64_t s2 : *lst) {
        if (tgt_lo < s2 + h_in && s2 < tgt_hi) {
          leaks = true;
          break;
        }
      }
      if (leaks) break;
    }
    if (!leaks) kept.push_back(s);
  }
  return kept;
}

}  // namespace

Splits chronological_split(const std::vector<int64_t>& windows, int64_t h_in, int64_t h_out,
                           const SplitRatios& ratios) {
  for (double r : {ratios.train, ratios.val, ratios.test}) {
    if (!(r > 0.0) || r > 1.0) throw ContractError("split: each ratio must be in (0, 1]");
  }
  if (ratios.train + ratios.val + ratios.test > 1.0 + 1e-12) {
    throw ContractError("split: ratios sum to more than 1");
  }
  const int64_t w = static_cast<int64_t>(windows.size());
  const int64_t k_test = static_cast<int64_t>(std::ceil(ratios.test * static_cast<double>(w)));
  const int64_t k_val = static_cast<int64_t>(std::ceil(ratios.val * static_cast<double>(w)));
  const int64_t k_train = static_cast<int64_t>(std::ceil(ratios.train * static_cast<double>(w)));
  if (k_test + k_val > w) throw ContractError("split: too few windows for val+test");

  Splits sp;
  sp.test.assign(windows.end() - k_test, windows.end());
  sp.val.assign(windows.end() - k_test - k_val, windows.end() - k_test);
  const int64_t train_take = std::min(k_train, w - k_test - k_val);
  sp.train.assign(windows.begin(), windows.begin() + train_take);

  // Only the training split contributes gradients, so only it is trimmed:
  // adjacent stride-1 val/test windows always share boundary context, and
  // dropping val against test would empty val whenever H_out exceeds its
  // width.
  sp.train = drop_leaky(sp.train, {&sp.val, &sp.test}, h_in, h_out);

  if (sp.train.empty() || sp.val.empty() || sp.test.empty()) {
    throw ContractError("split: a split is empty after leakage dropping");
  }
  return sp;
}

Tensor NormStats::apply(const Tensor& x) const {
  const int64_t c = x.shape.back();
  if (c != static_cast<int64_t>(mean.size())) {
    throw ShapeError("normalize: tensor channel dim " + std::to_string(c) + " vs stats " +
                     std::to_string(mean.size()));
  }
  Tensor out = x;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const int64_t ch = i % c;
    out[i] = static_cast<float>(apply_one(static_cast<double>(out[i]), ch));
  }
  return out;
}

Tensor NormStats::invert(const Tensor& x) const {
  const int64_t c = x.shape.back();
  if (c != static_cast<int64_t>(mean.size())) {
    throw ShapeError("denormalize: tensor channel dim " + std::to_string(c) + " vs stats " +
                     std::to_string(mean.size()));
  }
  Tensor out = x;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const int64_t ch = i % c;
    out[i] = static_cast<float>(invert_one(static_cast<double>(out[i]), ch));
  }
  return out;
}

NormStats fit_normalizer(const FlowSeries& series, const std::vector<int64_t>& train_windows,
                         int64_t h_in) {
  if (train_windows.empty()) throw ContractError("fit_normalizer: no training windows");
  const int64_t c = series.channel_count();
  std::vector<double> sum(static_cast<size_t>(c), 0.0);
  std::vector<double> sumsq(static_cast<size_t>(c), 0.0);
  int64_t count = 0;
  for (int64_t s : train_windows) {
    for (int64_t r = 0; r < series.regions(); ++r) {
      for (int64_t t = s; t < s + h_in; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) {
          const double v = static_cast<double>(series.values.at(r, t, ch));
          sum[static_cast<size_t>(ch)] += v;
          sumsq[static_cast<size_t>(ch)] += v * v;
        }
        ++count;
      }
    }
  }
  NormStats stats;
  stats.mean.resize(static_cast<size_t>(c));
  stats.stddev.resize(static_cast<size_t>(c));
  for (int64_t ch = 0; ch < c; ++ch) {
    const double m = sum[static_cast<size_t>(ch)] / static_cast<double>(count);
    const double var = std::max(0.0, sumsq[static_cast<size_t>(ch)] / static_cast<double>(count) - m * m);
    stats.mean[static_cast<size_t>(ch)] = m;
    stats.stddev[static_cast<size_t>(ch)] = std::max(std::sqrt(var), 1e-6);
  }
  return stats;
}

std::vector<std::vector<int64_t>> neighbor_lists_from_adjacency(const Tensor& adjacency,
                                                                int64_t k_r) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
    throw ShapeError("adjacency must be square, got " + shape_str(adjacency.shape));
  }
  const int64_t n = adjacency.dim(0);
  std::vector<std::vector<int64_t>> lists(static_cast<size_t>(n));
  if (k_r <= 0) return lists;
  for (int64_t s = 0; s < n; ++s) {
    std::vector<std::pair<float, int64_t>> cands;
    for (int64_t j = 0; j < n; ++j) {
      if (j == s) continue;
      const float wgt = adjacency.at(s, j);
      if (wgt > 0.0f) cands.emplace_back(wgt, j);
    }
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    auto& lst = lists[static_cast<size_t>(s)];
    for (size_t i = 0; i < cands.size() && static_cast<int64_t>(i) < k_r; ++i) {
      lst.push_back(cands[i].second);
    }
  }
  return lists;
}

std::vector<std::vector<int64_t>> neighbor_lists_from_grid(int64_t rows, int64_t cols,
                                                           int64_t k_r) {
  const int64_t n = rows * cols;
  std::vector<std::vector<int64_t>> lists(static_cast<size_t>(n));
  if (k_r <= 0) return lists;
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      auto& lst = lists[static_cast<size_t>(r * cols + c)];
      for (int64_t dr = -1; dr <= 1; ++dr) {
        for (int64_t dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int64_t rr = r + dr;
          const int64_t cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          lst.push_back(rr * cols + cc);
        }
      }
      std::sort(lst.begin(), lst.end());
      if (static_cast<int64_t>(lst.size()) > k_r) lst.resize(static_cast<size_t>(k_r));
    }
  }
  return lists;
}

std::vector<std::vector<int64_t>> neighbor_lists_literal(int64_t n, int64_t k_r) {
  std::vector<std::vector<int64_t>> lists(static_cast<size_t>(n));
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t k = 1; k <= k_r && s + k < n; ++k) lists[static_cast<size_t>(s)].push_back(s + k);
  }
  return lists;
}

RegionGraph make_region_graph(Tensor adjacency, int64_t k_r) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
    throw ShapeError("adjacency must be square, got " + shape_str(adjacency.shape));
  }
  const int64_t n = adjacency.dim(0);
  for (int64_t i = 0; i < n; ++i) {
    if (adjacency.at(i, i) != 0.0f) throw ContractError("adjacency: nonzero diagonal at " + std::to_string(i));
    for (int64_t j = i + 1; j < n; ++j) {
      if (std::abs(adjacency.at(i, j) - adjacency.at(j, i)) > 1e-6f) {
        throw ContractError("adjacency: asymmetric at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
      }
      if (adjacency.at(i, j) < 0.0f) throw ContractError("adjacency: negative weight");
    }
  }
  RegionGraph g;
  g.neighbor_lists = neighbor_lists_from_adjacency(adjacency, k_r);
  g.adjacency = std::move(adjacency);
  return g;
}

std::pair<int64_t, int64_t> grid_dims_for(int64_t n) {
  int64_t rows = static_cast<int64_t>(std::floor(std::sqrt(static_cast<double>(n))));
  while (rows > 1 && n % rows != 0) --rows;
  return {rows, n / rows};
}

SynthResult generate_synthetic(const SynthConfig& cfg) {
  if (cfg.regions < 1 || cfg.timesteps < 1 || cfg.channels < 1) {
    throw ContractError("synth: regions, timesteps, channels must be >= 1");
  }
  if (cfg.diurnal_amp < 0.0 || cfg.weekend_factor < 0.0 || cfg.noise_std < 0.0 ||
      cfg.base_min < 0.0 || cfg.base_max < cfg.base_min) {
    throw ContractError("synth: amplitudes must be >= 0");
  }
  if (!(cfg.mixing_rho >= 0.0 && cfg.mixing_rho < 1.0)) {
    throw ContractError("synth: mixing coefficient must be in [0, 1)");
  }
  if (cfg.phase_jitter < 0.0) throw ContractError("synth: phase jitter must be >= 0");
  if (cfg.interval_minutes <= 0 || 1440 % cfg.interval_minutes != 0) {
    throw ContractError("synth: interval must divide 1440");
  }
  if (!cfg.base_rates.empty() && static_cast<int64_t>(cfg.base_rates.size()) != cfg.regions) {
    throw ContractError("synth: base_rates size must equal regions");
  }

  const int64_t n = cfg.regions;
  const int64_t total = cfg.timesteps;
  const int64_t c = cfg.channels;
  const auto [rows, cols] = grid_dims_for(n);
  const int t1 = 1440 / cfg.interval_minutes;

  SynthTruth truth;
  truth.grid_rows = rows;
  truth.grid_cols = cols;
  truth.base_rates = cfg.base_rates;
  if (truth.base_rates.empty()) {
    SplitMix64 base_rng(cfg.seed, streams::kSynthBase);
    truth.base_rates.resize(static_cast<size_t>(n));
    base_rng.fill_uniform(truth.base_rates.data(), n, cfg.base_min, cfg.base_max);
  }
  {
    SplitMix64 phase_rng(cfg.seed, streams::kSynthPhase);
    truth.phases.resize(static_cast<size_t>(n * c));
    for (int64_t ch = 0; ch < c; ++ch) {
      const double shared = phase_rng.next_uniform(0.0, 2.0 * M_PI);
      for (int64_t s = 0; s < n; ++s) {
        truth.phases[static_cast<size_t>(s * c + ch)] =
            shared + phase_rng.next_uniform(-cfg.phase_jitter, cfg.phase_jitter);
      }
    }
  }

  auto neighbors = neighbor_lists_from_grid(rows, cols, 8);

  FlowSeries series;
  series.values = Tensor({n, total, c});
  series.start_time = cfg.start_time;
  series.interval_minutes = cfg.interval_minutes;
  if (c == 2) {
    series.channels = {"inflow", "outflow"};
  } else {
    for (int64_t j = 0; j < c; ++j) series.channels.push_back("flow" + std::to_string(j));
  }

  SplitMix64 noise_rng(cfg.seed, streams::kSynthNoise);
  std::vector<double> clean(static_cast<size_t>(n * c));
  std::vector<double> mixed(static_cast<size_t>(n * c));
  for (int64_t t = 0; t < total; ++t) {
    const timeutil::EpochMinutes at = cfg.start_time + t * cfg.interval_minutes;
    const int tod = timeutil::minute_of_day(at) / cfg.interval_minutes;
    const int dow = timeutil::weekday(at);
    const bool weekend = dow >= 5;
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t ch = 0; ch < c; ++ch) {
        const double phase = truth.phases[static_cast<size_t>(s * c + ch)];
        double v = truth.base_rates[static_cast<size_t>(s)] *
                   (1.0 + cfg.diurnal_amp *
                              std::sin(2.0 * M_PI * static_cast<double>(tod) / t1 + phase));
        if (weekend) v *= cfg.weekend_factor;
        clean[static_cast<size_t>(s * c + ch)] = std::max(0.0, v);
      }
    }
    for (int64_t s = 0; s < n; ++s) {
      const auto& nbrs = neighbors[static_cast<size_t>(s)];
      for (int64_t ch = 0; ch < c; ++ch) {
        double v = clean[static_cast<size_t>(s * c + ch)];
        if (!nbrs.empty() && cfg.mixing_rho > 0.0) {
          double acc = 0.0;
          for (int64_t nb : nbrs) acc += clean[static_cast<size_t>(nb * c + ch)];
          v = (1.0 - cfg.mixing_rho) * v + cfg.mixing_rho * acc / static_cast<double>(nbrs.size());
        }
        mixed[static_cast<size_t>(s * c + ch)] = v;
      }
    }
    // noise draws happen in a fixed (s, ch) order independent of rho
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t ch = 0; ch < c; ++ch) {
        double v = mixed[static_cast<size_t>(s * c + ch)];
        if (cfg.noise_std > 0.0) v += cfg.noise_std * noise_rng.next_gaussian();
        series.values.at(s, t, ch) = static_cast<float>(std::max(0.0, v));
      }
    }
  }

  RegionGraph graph;
  graph.grid_rows = rows;
  graph.grid_cols = cols;
  graph.neighbor_lists = std::move(neighbors);
  graph.adjacency = Tensor({n, n});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t nb : graph.neighbor_lists[static_cast<size_t>(s)]) {
      graph.adjacency.at(s, nb) = 1.0f;
    }
  }

  SynthResult res;
  res.series = std::move(series);
  res.graph = std::move(graph);
  res.truth = std::move(truth);
  return res;
}

WindowBatch assemble_batch(const FlowSeries& series, const CalendarFeatures& cal,
                           const NormStats& norm, const std::vector<int64_t>& starts,
                           int64_t h_in, int64_t h_out, SplitTag tag) {
  const int64_t b = static_cast<int64_t>(starts.size());
  const int64_t n = series.regions();
  const int64_t c = series.channel_count();

  WindowBatch batch;
  batch.tag = tag;
  batch.window_starts = starts;
  batch.inputs = Tensor({b, n, h_in, c});
  batch.targets = Tensor({b, n, h_out, c});
  batch.tod_idx.resize(static_cast<size_t>(b * h_in));
  batch.dow_idx.resize(static_cast<size_t>(b * h_in));

  for (int64_t i = 0; i < b; ++i) {
    const int64_t s = starts[static_cast<size_t>(i)];
    if (s < 0 || s + h_in + h_out > series.steps()) {
      throw BoundsError("assemble_batch: window start " + std::to_string(s) + " out of range");
    }
    for (int64_t t = 0; t < h_in; ++t) {
      batch.tod_idx[static_cast<size_t>(i * h_in + t)] = cal.tod[static_cast<size_t>(s + t)];
      batch.dow_idx[static_cast<size_t>(i * h_in + t)] = cal.dow[static_cast<size_t>(s + t)];
    }
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t t = 0; t < h_in; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) {
          batch.inputs.at(i, r, t, ch) = static_cast<float>(
              norm.apply_one(static_cast<double>(series.values.at(r, s + t, ch)), ch));
        }
      }
      for (int64_t t = 0; t < h_out; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) {
          batch.targets.at(i, r, t, ch) = series.values.at(r, s + h_in + t, ch);
        }
      }
    }
  }
  return batch;
}

namespace {

Tensor load_adjacency_csv(const std::string& path, int64_t n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open adjacency file " + path);
  Tensor adj({n, n});
  std::string line;
  int64_t r = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (r >= n) throw IoError(path + ": more than " + std::to_string(n) + " adjacency rows");
    auto fields = split_csv_line(line);
    if (static_cast<int64_t>(fields.size()) != n) {
      throw IoError(path + ": row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                    " columns, expected " + std::to_string(n));
    }
    for (int64_t j = 0; j < n; ++j) {
      adj.at(r, j) = static_cast<float>(parse_double(fields[static_cast<size_t>(j)], "adjacency"));
    }
    ++r;
  }
  if (r != n) throw IoError(path + ": expected " + std::to_string(n) + " rows, got " + std::to_string(r));
  return adj;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

}  // namespace

Dataset load_dataset(const std::string& dir, int64_t k_r) {
  Dataset ds;
  const std::string meta_path = join_path(dir, "meta.txt");
  ds.meta_bytes = read_file(meta_path);
  ds.meta = meta_from_string(ds.meta_bytes);
  ds.series = ingest_csv(join_path(dir, "flows.csv"), ds.meta);
  ds.cal = calendar_features(ds.series);
  if (!ds.meta.adjacency_path.empty()) {
    Tensor adj = load_adjacency_csv(join_path(dir, ds.meta.adjacency_path), ds.meta.regions);
    ds.graph = make_region_graph(std::move(adj), k_r);
  } else if (ds.meta.grid_rows > 0 && ds.meta.grid_cols > 0) {
    if (ds.meta.grid_rows * ds.meta.grid_cols != ds.meta.regions) {
      throw IoError("meta: grid_rows*grid_cols != regions");
    }
    ds.graph.grid_rows = ds.meta.grid_rows;
    ds.graph.grid_cols = ds.meta.grid_cols;
    ds.graph.neighbor_lists = neighbor_lists_from_grid(ds.meta.grid_rows, ds.meta.grid_cols, k_r);
  }
  return ds;
}

Dataset dataset_from_synth(const SynthConfig& cfg, int64_t k_r) {
  SynthResult synth = generate_synthetic(cfg);
  Dataset ds;
  ds.series = std::move(synth.series);
  ds.cal = calendar_features(ds.series);
  ds.graph = std::move(synth.graph);
  if (k_r != 8) {
    ds.graph.neighbor_lists = neighbor_lists_from_grid(ds.graph.grid_rows, ds.graph.grid_cols, k_r);
  }
  ds.meta.regions = cfg.regions;
  ds.meta.interval_minutes = cfg.interval_minutes;
  ds.meta.start_time = cfg.start_time;
  ds.meta.channels = ds.series.channels;
  ds.meta.timesteps = cfg.timesteps;
  ds.meta.grid_rows = ds.graph.grid_rows;
  ds.meta.grid_cols = ds.graph.grid_cols;
  ds.meta_bytes = meta_to_string(ds.meta);
  return ds;
}

}  // namespace fd::data
