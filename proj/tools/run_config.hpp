#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace onn::cli {

enum Scope : unsigned {
  kPrepare = 1u << 0,
  kTrain = 1u << 1,
  kEval = 1u << 2,
  kGradcheck = 1u << 3,
  kSynth = 1u << 4,
};

struct KeySpec {
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
  // Setting used in the published experiments, when there is one.
  std::string_view reference_value;
  unsigned scopes;
};

const std::vector<KeySpec>& config_keys();
const KeySpec* find_key(std::string_view key);

/// Flat key = value configuration. Every known key always has a value.
class RunConfig {
 public:
  RunConfig();

  // `#` starts a comment; blank lines are ignored. Unknown keys throw ConfigError.
  void merge_file(const std::string& path);
  void merge_stream(std::istream& in, const std::string& origin);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;

  // `key = value` lines for the keys in `scope`, in registry order; feeding the
  // output back through merge_stream reproduces the configuration.
  std::string echo(unsigned scope) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace onn::cli
