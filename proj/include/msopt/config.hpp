#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msopt {

/// Raised for malformed or inconsistent experiment configs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { integer, real, text, choice, real_list, integer_list, path, boolean };

struct KeySpec {
  std::string section;
  std::string key;
  ValueType type;
  std::string default_value;  ///< empty = no default
  std::string help;
  std::vector<std::string> commands;  ///< subcommands accepting the key
  std::vector<std::string> choices;   ///< for ValueType::choice
  std::vector<std::string> required_for;

  std::string qualified() const { return section + "." + key; }
};

const std::vector<std::string>& subcommands();
const std::vector<KeySpec>& config_schema();
/// Every key accepted by a subcommand, one per line with type, default and help.
std::string schema_help(const std::string& command);

/// Parsed config for one subcommand. Values are canonical text keyed by
/// "section.key"; every key accepted by the subcommand is present, defaults
/// filled in, numbers re-formatted to 17 significant digits.
class ExperimentConfig {
 public:
  const std::string& command() const { return command_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  bool has(const std::string& qualified) const;
  std::string text(const std::string& qualified) const;
  double real(const std::string& qualified) const;
  std::int64_t integer(const std::string& qualified) const;
  std::size_t count(const std::string& qualified) const;
  bool boolean(const std::string& qualified) const;
  std::vector<double> real_list(const std::string& qualified) const;
  std::vector<std::size_t> count_list(const std::string& qualified) const;

  void set(const std::string& qualified, const std::string& raw);

  /// Config file text that reloads to an identical config.
  std::string echo() const;

  bool operator==(const ExperimentConfig&) const = default;

  friend ExperimentConfig parse_config(const std::string& text, const std::string& command,
                                       const std::string& origin);

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

/// Strict parser: [section] headers, key = value lines, '#' comments. Unknown
/// sections/keys, keys not accepted by the subcommand, duplicates (reported
/// with both line numbers), bad values and missing required keys are errors.
ExperimentConfig parse_config(const std::string& text, const std::string& command,
                              const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command);

}  // namespace msopt
