#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "onn/numerics.hpp"

namespace onn {

enum class ColumnKind : std::uint8_t { Label = 0, Categorical = 1, Numeric = 2 };

std::string_view to_string(ColumnKind kind);

/// One entry per raw column: `label`, `cat` or `num`, optionally followed by a name.
struct ColumnSpec {
  std::vector<ColumnKind> kinds;
  std::vector<std::string> names;

  std::size_t column_count() const { return kinds.size(); }
  std::size_t feature_count() const;
};

ColumnSpec parse_column_spec(std::istream& in);
ColumnSpec load_column_spec(const std::string& path);
// Convenience: `label` then `numeric` num columns then `categorical` cat columns.
ColumnSpec make_column_spec(std::size_t numeric, std::size_t categorical);

inline constexpr std::int64_t kMissingBucket = -1;
inline constexpr std::string_view kMissingToken = "\xE2\x9F\x82";  // U+27C2 "⟂"

/// Bucket for a continuous value: floor(2 ln x) above 1, 0 on (0, 1],
/// kMissingBucket for x <= 0, NaN or a missing cell.
std::int64_t discretize_continuous(std::optional<double> x);
// Vocabulary token for a bucket; the missing bucket renders as kMissingToken.
std::string bucket_token(std::int64_t bucket);
// Empty or unparsable cells are missing.
std::optional<double> parse_numeric(std::string_view cell);

struct FieldVocab {
  std::string name;
  std::size_t column = 0;
  ColumnKind kind = ColumnKind::Categorical;
  // values[0] is the reserved unknown slot.
  std::vector<std::string> values;
  std::unordered_map<std::string, std::uint32_t> index;

  std::size_t cardinality() const { return values.size(); }
  // 0 for tokens never seen while building the schema.
  std::uint32_t index_of(const std::string& token) const;
};

inline constexpr std::string_view kUnknownToken = "<unk>";

class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FieldVocab> fields, std::size_t label_column, std::size_t column_count);

  std::size_t field_count() const { return fields_.size(); }
  std::size_t column_count() const { return column_count_; }
  std::size_t label_column() const { return label_column_; }
  const FieldVocab& field(std::size_t i) const { return fields_.at(i); }
  const std::vector<FieldVocab>& fields() const { return fields_; }
  std::vector<std::size_t> cardinalities() const;

  // Token a raw cell contributes to its field's vocabulary.
  std::string token(std::size_t field, std::string_view cell) const;
  const std::string& decode(std::size_t field, std::uint32_t index) const;

  // Stable 64-bit fingerprint of the serialized schema.
  std::uint64_t hash() const;

  void write(std::ostream& out) const;
  static FeatureSchema read(std::istream& in);

  bool operator==(const FeatureSchema& other) const;

 private:
  std::vector<FieldVocab> fields_;
  std::size_t label_column_ = 0;
  std::size_t column_count_ = 0;
};

struct Sample {
  std::vector<std::uint32_t> field_values;
  std::uint8_t label = 0;

  bool operator==(const Sample&) const = default;
};

struct RawRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string reason;
};

struct RawTable {
  std::vector<RawRow> rows;
  // Rows whose column count disagrees with the column spec.
  std::vector<RejectedRow> rejected;
};

RawTable read_delimited(std::istream& in, char delimiter, std::size_t expected_columns);
RawTable read_delimited_file(const std::string& path, char delimiter, std::size_t expected_columns);

// Throws DataError on a label other than "0" or "1".
std::uint8_t parse_label(std::string_view cell);

/// First-seen vocabulary per feature column. Rows with a malformed label do
/// not contribute. Throws ConfigError without a label column or on an empty table.
FeatureSchema build_schema(const RawTable& table, const ColumnSpec& spec);

// Unseen values map to index 0. Throws DataError on a malformed label.
Sample encode_sample(std::span<const std::string> cells, const FeatureSchema& schema);

struct Dataset {
  FeatureSchema schema;
  std::vector<Sample> samples;
};

struct EncodeSummary {
  std::size_t accepted = 0;
  std::vector<RejectedRow> rejected;
};

Dataset encode_table(const RawTable& table, const FeatureSchema& schema, EncodeSummary* summary = nullptr);

// Versioned binary cache; see docs/FORMATS.md.
void save_dataset(const Dataset& data, std::ostream& out);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);

enum class StreamMode { Offline, Online };

struct Batch {
  std::vector<const Sample*> samples;
  // Position of each sample in the source dataset.
  std::vector<std::size_t> positions;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Sequential batch iterator. Online mode walks the data once in stored order;
/// offline mode reshuffles at the start of every epoch. The last partial batch
/// of an epoch is always emitted.
class BatchStream {
 public:
  BatchStream(std::span<const Sample> samples, std::size_t batch_size, StreamMode mode, std::size_t epochs,
              SeededRng rng);

  bool next(Batch& batch);

  std::size_t epoch() const { return epoch_; }
  std::size_t batches_per_epoch() const;
  std::size_t total_batches() const { return batches_per_epoch() * epochs_; }

 private:
  std::span<const Sample> samples_;
  std::size_t batch_size_;
  StreamMode mode_;
  std::size_t epochs_;
  SeededRng rng_;
  std::vector<std::size_t> order_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  bool started_ = false;

  void begin_epoch();
};

// Convenience for evaluation: consecutive batches in stored order.
std::vector<Batch> sequential_batches(std::span<const Sample> samples, std::size_t batch_size);

}  // namespace onn
