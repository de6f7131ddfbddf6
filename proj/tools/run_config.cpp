#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "onn/errors.hpp"

namespace onn::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"model", "onn", "fm, ffm, dnn, pnn or onn", "", kTrain},
      {"variant", "inner", "pairwise product: inner, outer, subnet or inner+outer", "inner", kTrain},
      {"embed_dim", "10", "embedding width d", "10", kTrain},
      {"copy_dim", "0", "onn copy-slot width; 0 uses embed_dim", "", kTrain},
      {"hidden", "400,400,400", "hidden layer widths", "400,400,400 or 200,200,200", kTrain},
      {"depth", "0", "number of hidden layers; 0 keeps `hidden` as given, otherwise the list is cut or padded with its last width",
       "3", kTrain},
      {"subnet_width", "0", "hidden width of the subnet product; 0 uses embed_dim", "", kTrain},
      {"batch_norm", "true", "batch normalization in the MLP", "true", kTrain},
      {"dropout", "0", "dropout rate after each hidden layer", "", kTrain},
      {"shallow_terms", "true", "fm/ffm global bias and per-value linear weights", "", kTrain},
      {"pairwise", "true", "fm/ffm pairwise term; false gives logistic regression", "", kTrain},
      {"init_scale", "0.01", "embeddings start Uniform(-s, s)", "", kTrain},
      {"lr", "0.0005", "Adam learning rate", "", kTrain},
      {"lr_grid", "", "comma-separated learning rates; when set, one run per entry, best by test logloss",
       "0.0001,0.00025,0.0005,0.00075,0.001", kTrain},
      {"beta1", "0.9", "Adam first-moment decay", "", kTrain},
      {"beta2", "0.999", "Adam second-moment decay", "", kTrain},
      {"adam_eps", "1e-8", "Adam denominator epsilon", "", kTrain},
      {"bn_momentum", "0.9", "batch-norm running-statistics momentum", "", kTrain},
      {"bn_eps", "1e-5", "batch-norm variance epsilon", "", kTrain},
      {"batch_size", "2500", "training batch size", "2500", kTrain},
      {"epochs", "1", "offline epochs; online mode always makes one pass", "", kTrain},
      {"mode", "offline", "offline (shuffled, multi-epoch) or online (one ordered pass)", "", kTrain},
      {"seed", "1", "random seed", "", kTrain | kGradcheck | kSynth},
      {"eval_interval", "1000", "training steps between test evaluations", "", kTrain},
      {"eval_batch", "4096", "batch size for evaluation", "", kTrain | kEval},
      {"train", "", "training dataset cache", "", kTrain},
      {"test", "", "test dataset cache", "", kTrain | kEval},
      {"curve", "", "output CSV of step,test_logloss,test_auc", "", kTrain},
      {"checkpoint", "", "model checkpoint (written by train, read by eval)", "", kTrain | kEval},
      {"report", "", "output file for the effective config and final report", "", kTrain | kEval},
      {"input", "", "raw delimited data file", "", kPrepare},
      {"colspec", "", "column spec file: one `label|cat|num [name]` per column", "", kPrepare},
      {"out", "", "output dataset cache", "", kPrepare | kSynth},
      {"delimiter", "tab", "column delimiter: tab, comma, space or a single character", "", kPrepare},
      {"schema_from", "", "reuse the vocabulary of an existing dataset cache (for a test split)", "", kPrepare},
      {"fields", "6", "synthetic field count", "", kSynth},
      {"cardinality", "10", "values per synthetic field", "", kSynth},
      {"strength", "2", "interaction strength (logit scale)", "", kSynth},
      {"n", "50000", "synthetic training rows", "", kSynth},
      {"test_n", "10000", "synthetic test rows; written only when test_out is set", "", kSynth},
      {"test_out", "", "output cache for the synthetic test split", "", kSynth},
      {"gc_models", "fm,ffm,dnn,pnn,onn", "models to gradient-check", "", kGradcheck},
      {"gc_variants", "inner,outer,subnet,inner+outer", "product variants to check on pnn and onn", "", kGradcheck},
      {"gc_fields", "5", "fields in the check instance", "", kGradcheck},
      {"gc_cardinality", "8", "largest field cardinality in the check instance", "", kGradcheck},
      {"gc_dim", "4", "embedding width in the check instance", "", kGradcheck},
      {"gc_hidden", "8,8", "hidden widths in the check instance", "", kGradcheck},
      {"gc_batch", "8", "batch size in the check instance", "", kGradcheck},
      {"gc_eps", "1e-5", "central-difference step", "", kGradcheck},
      {"gc_tol", "1e-4", "largest accepted relative error", "", kGradcheck},
  };
  return keys;
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : config_keys()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(std::string(k.key), std::string(k.default_value));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::merge_stream(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!find_key(key)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    set(key, value);
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  merge_stream(in, path);
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::integer(const std::string& key) const { return parse_int(key, str(key)); }

std::size_t RunConfig::count(const std::string& key) const {
  const auto v = integer(key);
  if (v < 0) throw ConfigError("key '" + key + "' must not be negative");
  return static_cast<std::size_t>(v);
}

double RunConfig::real(const std::string& key) const { return parse_real(key, str(key)); }

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(str(key))) {
    const auto v = parse_int(key, item);
    if (v < 0) throw ConfigError("key '" + key + "' must not contain negative entries");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(str(key))) out.push_back(parse_real(key, item));
  return out;
}

std::string RunConfig::echo(unsigned scope) const {
  std::string out;
  for (const auto& k : config_keys()) {
    if (!(k.scopes & scope)) continue;
    out += std::string(k.key) + " = " + values_.find(k.key)->second + "\n";
  }
  return out;
}

}  // namespace onn::cli
