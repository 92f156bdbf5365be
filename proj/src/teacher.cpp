#include "flowdistill/teacher.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowdistill/errors.hpp"
#include "flowdistill/rng.hpp"
#include "flowdistill/timeutil.hpp"

namespace fd::teacher {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'T', 'P'};
constexpr uint32_t kVersion = 1;

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
void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n, const char* what) {
    if (pos + n > buf.size()) {
      throw IoError(path + ": truncated payload reading " + what + " (have " +
                    std::to_string(buf.size() - pos) + " bytes, need " + std::to_string(n) + ")");
    }
  }
  uint16_t u16() {
    need(2, "u16");
    uint16_t v = static_cast<uint8_t>(buf[pos]) | (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4, "u32");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8, "u64");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

uint64_t dataset_fingerprint(const std::string& meta_bytes, const data::SplitRatios& ratios,
                             const std::vector<int64_t>& window_starts) {
  std::string payload = meta_bytes;
  for (double r : {ratios.train, ratios.val, ratios.test}) {
    uint64_t bits;
    std::memcpy(&bits, &r, 8);
    put_u64(payload, bits);
  }
  for (int64_t s : window_starts) put_u64(payload, static_cast<uint64_t>(s));

  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save_predictions(const TeacherPredictions& preds, const std::string& path) {
  if (preds.values.rank() != 4) {
    throw ShapeError("teacher file: values must be [W,N,H_out,C], got " +
                     shape_str(preds.values.shape));
  }
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(preds.window_count()));
  put_u32(out, static_cast<uint32_t>(preds.regions()));
  put_u16(out, static_cast<uint16_t>(preds.horizon()));
  put_u16(out, static_cast<uint16_t>(preds.channels()));
  put_u64(out, preds.fingerprint);
  for (float v : preds.values.values) put_f32(out, v);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

TeacherPredictions load_predictions(const std::string& path, const ExpectedDims& expect,
                                    uint64_t expect_fingerprint) {
  const std::string buf = read_file(path);
  Reader r{buf, 0, path};
  r.need(4, "magic");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError(path + ": bad magic, not a teacher file");
  r.pos = 4;
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError(path + ": unsupported version " + std::to_string(version));
  }
  const int64_t w = r.u32();
  const int64_t n = r.u32();
  const int64_t h_out = r.u16();
  const int64_t c = r.u16();
  const uint64_t fp = r.u64();

  if (w != expect.window_count || n != expect.regions || h_out != expect.h_out ||
      c != expect.channels) {
    throw IoError(path + ": dimension mismatch, file has [W=" + std::to_string(w) +
                  ", N=" + std::to_string(n) + ", H_out=" + std::to_string(h_out) +
                  ", C=" + std::to_string(c) + "], dataset split needs [W=" +
                  std::to_string(expect.window_count) + ", N=" + std::to_string(expect.regions) +
                  ", H_out=" + std::to_string(expect.h_out) + ", C=" +
                  std::to_string(expect.channels) + "]");
  }
  if (fp != expect_fingerprint) {
    throw IoError(path + ": fingerprint mismatch (file " + std::to_string(fp) + ", dataset " +
                  std::to_string(expect_fingerprint) + "); teacher was produced for a different dataset/split");
  }

  TeacherPredictions preds;
  preds.fingerprint = fp;
  preds.values = Tensor({w, n, h_out, c});
  const int64_t count = preds.values.numel();
  r.need(static_cast<size_t>(count) * 4, "f32 payload");
  for (int64_t i = 0; i < count; ++i) preds.values[i] = r.f32();
  for (float v : preds.values.values) {
    if (!std::isfinite(v)) throw IoError(path + ": non-finite teacher value");
  }
  return preds;
}

TeacherPredictions oracle_teacher(const Tensor& targets, const OracleConfig& cfg,
                                  uint64_t fingerprint) {
  if (targets.rank() != 4) {
    throw ShapeError("oracle_teacher: targets must be [W,N,H_out,C], got " +
                     shape_str(targets.shape));
  }
  if (cfg.noise_std < 0) throw ContractError("oracle_teacher: noise_std must be >= 0");
  TeacherPredictions preds;
  preds.fingerprint = fingerprint;
  preds.values = targets;
  SplitMix64 rng(cfg.seed, streams::kOracleNoise);
  for (auto& v : preds.values.values) {
    double x = static_cast<double>(v) + cfg.bias;
    if (cfg.noise_std > 0) x += cfg.noise_std * rng.next_gaussian();
    v = static_cast<float>(std::max(0.0, x));
  }
  return preds;
}

RegionInfo load_region_info(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open region info file " + path);
  RegionInfo info;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos) throw IoError(path + ": malformed line '" + line + "'");
    try {
      info[std::stoll(line.substr(0, comma))] = line.substr(comma + 1);
    } catch (const std::exception&) {
      throw IoError(path + ": bad region id in '" + line + "'");
    }
  }
  return info;
}

namespace {

std::string flow_list(const data::FlowSeries& series, int64_t region, int64_t channel,
                      int64_t start, int64_t len) {
  std::string out = "[";
  for (int64_t t = 0; t < len; ++t) {
    if (t) out += ' ';
    out += std::to_string(
        std::llround(static_cast<double>(series.values.at(region, start + t, channel))));
  }
  out += ']';
  return out;
}

}  // namespace

int64_t export_instruction_prompts(const data::FlowSeries& series,
                                   const std::vector<int64_t>& windows,
                                   const RegionInfo& region_info, const PromptOptions& opts,
                                   const std::string& out_dir) {
  if (series.channel_count() != 2) {
    throw ContractError("export_instruction_prompts: needs the (inflow, outflow) channel pair, "
                        "dataset has " + std::to_string(series.channel_count()) + " channel(s)");
  }
  if (opts.region < 0 || opts.region >= series.regions()) {
    throw BoundsError("export_instruction_prompts: region " + std::to_string(opts.region) +
                      " out of range [0," + std::to_string(series.regions()) + ")");
  }
  std::filesystem::create_directories(out_dir);
  const std::string city = opts.city.empty() ? "the city" : opts.city;
  const int64_t interval = series.interval_minutes;

  auto stamp = [&](int64_t step) {
    return timeutil::format_prompt_time(series.start_time + step * interval);
  };

  int64_t written = 0;
  for (int64_t s : windows) {
    if (s + opts.h_in + opts.h_out > series.steps()) {
      throw BoundsError("export_instruction_prompts: window " + std::to_string(s) +
                        " exceeds the series");
    }
    std::ostringstream text;
    text << "Instructions:\n";
    text << "Given the historical data for taxi flow over " << opts.h_in
         << " time steps in a specific region of " << city << ", the recorded taxi inflows are "
         << flow_list(series, opts.region, 0, s, opts.h_in)
         << ", and the recorded taxi outflows are "
         << flow_list(series, opts.region, 1, s, opts.h_in)
         << ". The recording time of the historical data is '" << stamp(s) << " to "
         << stamp(s + opts.h_in - 1) << ", with data points recorded at " << interval
         << "-minute intervals'. Here is the region information: ";
    auto it = region_info.find(opts.region);
    if (it != region_info.end()) {
      text << it->second;
    } else {
      text << "no POI information available.";
    }
    text << " Now we want to predict the taxi inflow and outflow for the next " << opts.h_out
         << " time steps during the time period of '" << stamp(s + opts.h_in) << " to "
         << stamp(s + opts.h_in + opts.h_out - 1) << ", with data points recorded at " << interval
         << "-minute intervals'.\n";
    text << "\nAdditional Information:\n";
    text << "To improve prediction accuracy, a spatio-temporal model is utilized to encode the "
            "historical taxi data as tokens <ST_HIS>, where the first and the second tokens "
            "correspond to the representations of taxi inflow and outflow. Please conduct an "
            "analysis of the traffic patterns in this region, taking into account the provided "
            "time and regional information, and then generate the predictive tokens for "
            "regression, in the form \"<ST_PRE>\".\n";

    const std::string path = out_dir + "/prompt_" + std::to_string(s) + ".txt";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text.str();
    ++written;
  }
  return written;
}

}  // namespace fd::teacher
