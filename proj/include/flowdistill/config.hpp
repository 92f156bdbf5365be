#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flowdistill/errors.hpp"

namespace fd::cli {

enum class OptType { kInt, kUint, kDouble, kBool, kString };

struct OptionSpec {
  const char* key;
  OptType type;
  const char* default_value;
  const char* help;
};

// Every option every command understands; flag values beat config-file
// values beat defaults.
const std::vector<OptionSpec>& option_registry();

class RunConfig {
 public:
  // args: everything after the command word. Reads `--key value` and
  // `--key=value`; `--config <file>` loads a flat `key = value` file.
  static RunConfig parse(const std::vector<std::string>& args);

  int64_t get_int(const std::string& key) const;
  uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_str(const std::string& key) const;

  // set explicitly by a flag or the config file (not just defaulted)
  bool is_set(const std::string& key) const { return set_keys_.count(key) > 0; }

  std::vector<double> get_double_list(const std::string& key) const;

  // flat `key = value` echo of the full effective configuration
  std::string echo(const std::string& command) const;

 private:
  const OptionSpec& spec(const std::string& key) const;
  void set_value(const std::string& key, const std::string& value, const std::string& origin);

  std::map<std::string, std::string> values_;
  std::set<std::string> set_keys_;
};

std::string usage_text();

}  // namespace fd::cli
