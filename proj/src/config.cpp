#include "flowdistill/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fd::cli {

const std::vector<OptionSpec>& option_registry() {
  static const std::vector<OptionSpec> registry = {
      // paths and run identity
      {"data", OptType::kString, "", "dataset directory (flows.csv + meta.txt)"},
      {"teacher", OptType::kString, "", "teacher predictions file (FDTP)"},
      {"ckpt", OptType::kString, "", "checkpoint file"},
      {"out", OptType::kString, "out", "output directory"},
      {"seed", OptType::kUint, "1", "master seed"},
      {"parallel", OptType::kBool, "true", "use the OpenMP kernels (false: serial reference)"},

      // oracle teacher
      {"oracle-sigma", OptType::kDouble, "0", "oracle teacher noise std"},
      {"oracle-bias", OptType::kDouble, "0", "oracle teacher additive bias"},
      {"oracle-seed", OptType::kUint, "0", "oracle noise seed (0: derive from --seed)"},
      {"oracle-sigma-relative", OptType::kBool, "false",
       "interpret oracle-sigma as a multiple of the training data std"},

      // model
      {"d", OptType::kInt, "64", "embedding width"},
      {"layers", OptType::kInt, "3", "encoder layer count"},
      {"bottleneck", OptType::kInt, "64", "latent bottleneck width K"},
      {"h-in", OptType::kInt, "12", "input window length"},
      {"h-out", OptType::kInt, "12", "output horizon length"},
      {"activation", OptType::kString, "relu", "hidden activation: relu | softplus"},
      {"latent-noise", OptType::kString, "std", "reparameterization scale: std | paper-variance"},
      {"eval-mode", OptType::kString, "mean", "inference latent: mean | sample"},

      // losses
      {"lambda-tbl", OptType::kDouble, "0.10", "teacher-bounded loss weight"},
      {"delta", OptType::kDouble, "10", "teacher-bounded gate threshold (original units)"},
      {"lambda-kl", OptType::kDouble, "0.001", "KL divergence weight"},
      {"lambda-spa", OptType::kDouble, "0.6", "spatial correlation weight"},
      {"lambda-tem", OptType::kDouble, "0.35", "temporal correlation weight"},
      {"temporal-window", OptType::kInt, "12", "temporal correlation window H (even)"},
      {"k-r", OptType::kInt, "8", "max spatial neighbors"},
      {"tbl-granularity", OptType::kString, "element", "gate unit: element | sample | batch"},
      {"tbl-variant", OptType::kString, "paper-literal",
       "open-gate target: paper-literal | to-teacher"},
      {"neighbor-mode", OptType::kString, "nearest",
       "neighbor semantics: nearest (adjacency/grid) | literal (region s+k)"},

      // training
      {"lr0", OptType::kDouble, "0.0055", "initial learning rate"},
      {"decay", OptType::kDouble, "0.6", "lr decay factor"},
      {"decay-every", OptType::kInt, "5", "epochs per decay step"},
      {"batch-size", OptType::kInt, "80", "mini-batch size"},
      {"max-epochs", OptType::kInt, "50", "epoch cap"},
      {"patience", OptType::kInt, "10", "early-stop patience (epochs)"},
      {"clip-norm", OptType::kDouble, "5", "global gradient norm clip (<=0 disables)"},
      {"resume", OptType::kString, "", "checkpoint to resume training from"},

      // splits and windows
      {"train-ratio", OptType::kDouble, "0.1", "training split ratio"},
      {"val-ratio", OptType::kDouble, "0.1", "validation split ratio"},
      {"test-ratio", OptType::kDouble, "0.1", "test split ratio"},
      {"stride", OptType::kInt, "1", "window stride"},

      // synthetic generation
      {"synth-n", OptType::kInt, "16", "synthetic region count"},
      {"synth-t", OptType::kInt, "2000", "synthetic timestep count"},
      {"synth-c", OptType::kInt, "1", "synthetic channel count"},
      {"synth-interval", OptType::kInt, "30", "synthetic interval minutes"},
      {"synth-amp", OptType::kDouble, "0.6", "diurnal amplitude"},
      {"synth-weekend", OptType::kDouble, "0.75", "weekend factor"},
      {"synth-rho", OptType::kDouble, "0.3", "spatial mixing coefficient"},
      {"synth-noise", OptType::kDouble, "3", "noise std"},
      {"synth-base-min", OptType::kDouble, "35", "region base rate draw minimum"},
      {"synth-base-max", OptType::kDouble, "65", "region base rate draw maximum"},
      {"synth-phase-jitter", OptType::kDouble, "0.4",
       "per-region diurnal phase spread (radians)"},
      {"synth-start", OptType::kString, "2021-01-04T00:00:00Z", "series start time"},

      // sweep / ablate
      {"ratios", OptType::kString, "0.1,0.3,0.5", "training ratios for sweep"},
      {"seeds", OptType::kInt, "3", "seed count (seed, seed+1, ...)"},

      // bench
      {"bench-n", OptType::kInt, "16", "benchmark base region count"},
      {"bench-t", OptType::kInt, "600", "benchmark timestep count"},
      {"bench-reps", OptType::kInt, "5", "benchmark repetitions"},

      // prompt export
      {"region", OptType::kInt, "0", "region described in exported prompts"},
      {"region-info", OptType::kString, "", "region info CSV (region_id,description)"},
      {"city", OptType::kString, "", "city name for prompts (default from meta)"},

      // predict
      {"split", OptType::kString, "test", "window set for predict: train | val | test | all"},
  };
  return registry;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

const OptionSpec& RunConfig::spec(const std::string& key) const {
  for (const OptionSpec& s : option_registry()) {
    if (key == s.key) return s;
  }
  throw ConfigError("unknown option '" + key + "'");
}

void RunConfig::set_value(const std::string& key, const std::string& value,
                          const std::string& origin) {
  const OptionSpec& s = spec(key);
  switch (s.type) {
    case OptType::kInt: {
      try {
        size_t pos = 0;
        (void)std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError(origin + ": option '" + key + "' needs an integer, got '" + value + "'");
      }
      break;
    }
    case OptType::kUint: {
      try {
        size_t pos = 0;
        (void)std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError(origin + ": option '" + key + "' needs an unsigned integer, got '" +
                          value + "'");
      }
      break;
    }
    case OptType::kDouble: {
      try {
        size_t pos = 0;
        (void)std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError(origin + ": option '" + key + "' needs a number, got '" + value + "'");
      }
      break;
    }
    case OptType::kBool: {
      bool b;
      if (!parse_bool(value, b)) {
        throw ConfigError(origin + ": option '" + key + "' needs true/false, got '" + value + "'");
      }
      break;
    }
    case OptType::kString:
      break;
  }
  values_[key] = value;
  set_keys_.insert(key);
}

RunConfig RunConfig::parse(const std::vector<std::string>& args) {
  RunConfig cfg;
  for (const OptionSpec& s : option_registry()) cfg.values_[s.key] = s.default_value;

  std::map<std::string, std::string> flag_values;
  std::string config_path;

  for (size_t i = 0; i < args.size(); ++i) {
    std::string arg = args[i];
    if (arg.rfind("--", 0) != 0) {
      throw ConfigError("expected a --flag, got '" + arg + "'");
    }
    arg = arg.substr(2);
    std::string key, value;
    const size_t eq = arg.find('=');
    if (eq != std::string::npos) {
      key = arg.substr(0, eq);
      value = arg.substr(eq + 1);
    } else {
      key = arg;
      if (key == "config" || cfg.spec(key).type != OptType::kBool) {
        if (i + 1 >= args.size()) throw ConfigError("option '--" + key + "' needs a value");
        value = args[++i];
      } else {
        // bare boolean flag; consume a literal if one follows
        bool parsed;
        if (i + 1 < args.size() && parse_bool(args[i + 1], parsed)) {
          value = args[++i];
        } else {
          value = "true";
        }
      }
    }
    if (key == "config") {
      config_path = value;
    } else {
      cfg.spec(key);  // reject unknown keys before storing
      flag_values[key] = value;
    }
  }

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(config_path + ":" + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "command") continue;  // echoed config files carry the command line
      cfg.set_value(key, value, config_path);
    }
  }
  for (const auto& [key, value] : flag_values) cfg.set_value(key, value, "flag");
  return cfg;
}

int64_t RunConfig::get_int(const std::string& key) const { return std::stoll(values_.at(key)); }
uint64_t RunConfig::get_uint(const std::string& key) const { return std::stoull(values_.at(key)); }
double RunConfig::get_double(const std::string& key) const { return std::stod(values_.at(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  bool b = false;
  parse_bool(values_.at(key), b);
  return b;
}

const std::string& RunConfig::get_str(const std::string& key) const { return values_.at(key); }

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(values_.at(key));
  std::string field;
  while (std::getline(ss, field, ',')) {
    field = trim(field);
    if (field.empty()) continue;
    try {
      out.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw ConfigError("option '" + key + "': bad number '" + field + "'");
    }
  }
  return out;
}

std::string RunConfig::echo(const std::string& command) const {
  std::ostringstream os;
  os << "command = " << command << "\n";
  for (const auto& [key, value] : values_) os << key << " = " << value << "\n";
  return os.str();
}

std::string usage_text() {
  std::ostringstream os;
  os << "usage: flowdistill <command> [--flag value ...]\n\n"
     << "commands:\n"
     << "  generate        synthesize a traffic dataset (flows.csv + meta.txt)\n"
     << "  train           train the student model\n"
     << "  evaluate        metric report for a checkpoint on the test split\n"
     << "  predict         write model predictions for a split\n"
     << "  sweep           training-ratio sweep over seeds\n"
     << "  ablate          the five-variant ablation table\n"
     << "  export-prompts  instruction-format prompt files per window\n"
     << "  bench           inference latency scaling benchmark\n\n"
     << "common flags: --data DIR --out DIR --seed N --config FILE\n"
     << "`--config FILE` reads a flat `key = value` file; flags override it.\n\n"
     << "options:\n";
  for (const OptionSpec& s : option_registry()) {
    os << "  --" << s.key;
    if (s.default_value[0] != '\0') os << " (default " << s.default_value << ")";
    os << "  " << s.help << "\n";
  }
  return os.str();
}

}  // namespace fd::cli
