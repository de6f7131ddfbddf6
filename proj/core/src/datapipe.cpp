#include "onn/datapipe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "onn/binary_io.hpp"
#include "onn/errors.hpp"

namespace onn {

namespace {

constexpr std::string_view kDatasetMagic = "ONNDATA1";
constexpr std::uint32_t kDatasetVersion = 1;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Label: return "label";
    case ColumnKind::Categorical: return "cat";
    case ColumnKind::Numeric: return "num";
  }
  return "?";
}

std::size_t ColumnSpec::feature_count() const {
  std::size_t n = 0;
  for (auto k : kinds) n += k != ColumnKind::Label;
  return n;
}

ColumnSpec parse_column_spec(std::istream& in) {
  ColumnSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ss(t);
    std::string kind, name;
    ss >> kind >> name;
    if (kind == "label") {
      spec.kinds.push_back(ColumnKind::Label);
    } else if (kind == "cat") {
      spec.kinds.push_back(ColumnKind::Categorical);
    } else if (kind == "num") {
      spec.kinds.push_back(ColumnKind::Numeric);
    } else {
      throw ConfigError("column spec line " + std::to_string(lineno) + ": unknown column kind '" + kind +
                        "' (expected label, cat or num)");
    }
    spec.names.push_back(name.empty() ? "c" + std::to_string(spec.kinds.size() - 1) : name);
  }
  return spec;
}

ColumnSpec load_column_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open column spec " + path);
  return parse_column_spec(in);
}

ColumnSpec make_column_spec(std::size_t numeric, std::size_t categorical) {
  ColumnSpec spec;
  spec.kinds.push_back(ColumnKind::Label);
  spec.names.push_back("label");
  for (std::size_t i = 0; i < numeric; ++i) {
    spec.kinds.push_back(ColumnKind::Numeric);
    spec.names.push_back("I" + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < categorical; ++i) {
    spec.kinds.push_back(ColumnKind::Categorical);
    spec.names.push_back("C" + std::to_string(i + 1));
  }
  return spec;
}

std::int64_t discretize_continuous(std::optional<double> x) {
  if (!x || std::isnan(*x) || *x <= 0.0) return kMissingBucket;
  if (*x <= 1.0) return 0;
  return static_cast<std::int64_t>(std::floor(2.0 * std::log(*x)));
}

std::string bucket_token(std::int64_t bucket) {
  if (bucket == kMissingBucket) return std::string(kMissingToken);
  return std::to_string(bucket);
}

std::optional<double> parse_numeric(std::string_view cell) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::uint32_t FieldVocab::index_of(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? 0u : it->second;
}

FeatureSchema::FeatureSchema(std::vector<FieldVocab> fields, std::size_t label_column, std::size_t column_count)
    : fields_(std::move(fields)), label_column_(label_column), column_count_(column_count) {
  for (const auto& f : fields_) {
    if (f.cardinality() < 2) throw ConfigError("field " + f.name + " has no observed values");
  }
}

std::vector<std::size_t> FeatureSchema::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.cardinality());
  return out;
}

std::string FeatureSchema::token(std::size_t field, std::string_view cell) const {
  const auto& f = fields_.at(field);
  if (f.kind == ColumnKind::Numeric) return bucket_token(discretize_continuous(parse_numeric(cell)));
  return std::string(cell);
}

const std::string& FeatureSchema::decode(std::size_t field, std::uint32_t index) const {
  return fields_.at(field).values.at(index);
}

std::uint64_t FeatureSchema::hash() const {
  std::ostringstream buf;
  write(buf);
  return fnv1a64(buf.str());
}

void FeatureSchema::write(std::ostream& out) const {
  BinaryWriter w(out);
  w.u64(column_count_);
  w.u64(label_column_);
  w.u64(fields_.size());
  for (const auto& f : fields_) {
    w.str(f.name);
    w.u64(f.column);
    w.u8(static_cast<std::uint8_t>(f.kind));
    w.u64(f.values.size());
    for (const auto& v : f.values) w.str(v);
  }
}

FeatureSchema FeatureSchema::read(std::istream& in) {
  BinaryReader r(in);
  const std::size_t column_count = r.u64();
  const std::size_t label_column = r.u64();
  const std::size_t field_count = r.u64();
  if (field_count > column_count) throw DataError("schema: more fields than columns");
  std::vector<FieldVocab> fields(field_count);
  for (auto& f : fields) {
    f.name = r.str();
    f.column = r.u64();
    const auto kind = r.u8();
    if (kind > 2) throw DataError("schema: bad column kind");
    f.kind = static_cast<ColumnKind>(kind);
    const std::size_t n = r.u64();
    f.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      f.values.push_back(r.str());
      if (i > 0) f.index.emplace(f.values.back(), static_cast<std::uint32_t>(i));
    }
  }
  try {
    return FeatureSchema(std::move(fields), label_column, column_count);
  } catch (const ConfigError& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
}

bool FeatureSchema::operator==(const FeatureSchema& other) const {
  if (label_column_ != other.label_column_ || column_count_ != other.column_count_) return false;
  if (fields_.size() != other.fields_.size()) return false;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const auto& a = fields_[i];
    const auto& b = other.fields_[i];
    if (a.name != b.name || a.column != b.column || a.kind != b.kind || a.values != b.values) return false;
  }
  return true;
}

RawTable read_delimited(std::istream& in, char delimiter, std::size_t expected_columns) {
  RawTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    RawRow row;
    row.line = lineno;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(delimiter, start);
      if (pos == std::string::npos) {
        row.cells.emplace_back(line.substr(start));
        break;
      }
      row.cells.emplace_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (row.cells.size() != expected_columns) {
      table.rejected.push_back({lineno, "expected " + std::to_string(expected_columns) + " columns, found " +
                                            std::to_string(row.cells.size())});
      continue;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RawTable read_delimited_file(const std::string& path, char delimiter, std::size_t expected_columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_delimited(in, delimiter, expected_columns);
}

std::uint8_t parse_label(std::string_view cell) {
  const std::string t = trim(cell);
  if (t == "1") return 1;
  if (t == "0") return 0;
  throw DataError("malformed label '" + t + "'");
}

FeatureSchema build_schema(const RawTable& table, const ColumnSpec& spec) {
  std::size_t label_column = spec.column_count();
  for (std::size_t c = 0; c < spec.column_count(); ++c) {
    if (spec.kinds[c] == ColumnKind::Label) {
      if (label_column != spec.column_count()) throw ConfigError("column spec declares more than one label column");
      label_column = c;
    }
  }
  if (label_column == spec.column_count()) throw ConfigError("column spec declares no label column");
  if (spec.feature_count() == 0) throw ConfigError("column spec declares no feature columns");
  if (table.rows.empty()) throw ConfigError("cannot build a schema from an empty dataset");

  std::vector<FieldVocab> fields;
  for (std::size_t c = 0; c < spec.column_count(); ++c) {
    if (spec.kinds[c] == ColumnKind::Label) continue;
    FieldVocab f;
    f.name = spec.names[c];
    f.column = c;
    f.kind = spec.kinds[c];
    f.values.emplace_back(kUnknownToken);
    fields.push_back(std::move(f));
  }

  std::size_t usable = 0;
  for (const auto& row : table.rows) {
    if (row.cells.size() != spec.column_count()) continue;
    try {
      parse_label(row.cells[label_column]);
    } catch (const DataError&) {
      continue;
    }
    ++usable;
    for (auto& f : fields) {
      std::string tok = f.kind == ColumnKind::Numeric
                            ? bucket_token(discretize_continuous(parse_numeric(row.cells[f.column])))
                            : row.cells[f.column];
      if (f.index.find(tok) == f.index.end()) {
        f.index.emplace(tok, static_cast<std::uint32_t>(f.values.size()));
        f.values.push_back(std::move(tok));
      }
    }
  }
  if (usable == 0) throw ConfigError("cannot build a schema: no row has a valid label");
  return FeatureSchema(std::move(fields), label_column, spec.column_count());
}

Sample encode_sample(std::span<const std::string> cells, const FeatureSchema& schema) {
  if (cells.size() != schema.column_count()) {
    throw DataError("expected " + std::to_string(schema.column_count()) + " columns, found " +
                    std::to_string(cells.size()));
  }
  Sample s;
  s.label = parse_label(cells[schema.label_column()]);
  s.field_values.reserve(schema.field_count());
  for (std::size_t i = 0; i < schema.field_count(); ++i) {
    const auto& f = schema.field(i);
    s.field_values.push_back(f.index_of(schema.token(i, cells[f.column])));
  }
  return s;
}

Dataset encode_table(const RawTable& table, const FeatureSchema& schema, EncodeSummary* summary) {
  Dataset data{schema, {}};
  data.samples.reserve(table.rows.size());
  EncodeSummary local;
  local.rejected = table.rejected;
  for (const auto& row : table.rows) {
    try {
      data.samples.push_back(encode_sample(row.cells, schema));
      ++local.accepted;
    } catch (const DataError& e) {
      local.rejected.push_back({row.line, e.what()});
    }
  }
  if (summary) *summary = std::move(local);
  return data;
}

void save_dataset(const Dataset& data, std::ostream& out) {
  BinaryWriter w(out);
  w.raw(kDatasetMagic);
  w.u32(kDatasetVersion);
  data.schema.write(out);
  w.u64(data.samples.size());
  for (const auto& s : data.samples) {
    w.u8(s.label);
    for (auto v : s.field_values) w.u32(v);
  }
  if (!out) throw DataError("failed writing dataset cache");
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  save_dataset(data, out);
}

Dataset load_dataset(std::istream& in) {
  BinaryReader r(in);
  if (r.raw(kDatasetMagic.size()) != kDatasetMagic) throw DataError("not a dataset cache (bad magic)");
  const auto version = r.u32();
  if (version != kDatasetVersion) throw DataError("unsupported dataset cache version " + std::to_string(version));
  Dataset data;
  data.schema = FeatureSchema::read(in);
  const auto cards = data.schema.cardinalities();
  const std::size_t n = r.u64();
  data.samples.resize(n);
  for (auto& s : data.samples) {
    s.label = r.u8();
    if (s.label > 1) throw DataError("dataset cache: label out of range");
    s.field_values.resize(cards.size());
    for (std::size_t i = 0; i < cards.size(); ++i) {
      s.field_values[i] = r.u32();
      if (s.field_values[i] >= cards[i]) throw DataError("dataset cache: value index out of range");
    }
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset cache " + path);
  return load_dataset(in);
}

BatchStream::BatchStream(std::span<const Sample> samples, std::size_t batch_size, StreamMode mode,
                         std::size_t epochs, SeededRng rng)
    : samples_(samples),
      batch_size_(batch_size),
      mode_(mode),
      epochs_(mode == StreamMode::Online ? 1 : epochs),
      rng_(std::move(rng)) {
  if (batch_size_ == 0) throw ConfigError("batch size must be at least 1");
}

std::size_t BatchStream::batches_per_epoch() const { return (samples_.size() + batch_size_ - 1) / batch_size_; }

void BatchStream::begin_epoch() {
  order_.resize(samples_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (mode_ == StreamMode::Offline) rng_.shuffle(order_);
  cursor_ = 0;
}

bool BatchStream::next(Batch& batch) {
  batch.samples.clear();
  batch.positions.clear();
  if (samples_.empty() || epochs_ == 0) return false;
  if (!started_) {
    started_ = true;
    begin_epoch();
  }
  if (cursor_ >= order_.size()) {
    if (epoch_ + 1 >= epochs_) return false;
    ++epoch_;
    begin_epoch();
  }
  const std::size_t end = std::min(cursor_ + batch_size_, order_.size());
  for (std::size_t k = cursor_; k < end; ++k) {
    batch.positions.push_back(order_[k]);
    batch.samples.push_back(&samples_[order_[k]]);
  }
  cursor_ = end;
  return true;
}

std::vector<Batch> sequential_batches(std::span<const Sample> samples, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    Batch b;
    const std::size_t end = std::min(start + batch_size, samples.size());
    for (std::size_t k = start; k < end; ++k) {
      b.positions.push_back(k);
      b.samples.push_back(&samples[k]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace onn
