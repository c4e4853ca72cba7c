#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace gkmnc {

enum class AttributeKind { Nominal, Numeric, Identifier, Target };

std::string_view to_string(AttributeKind kind);
AttributeKind parse_attribute_kind(std::string_view text);

enum class ClassLabel : int { Negative = -1, Positive = 1 };

inline double as_sign(ClassLabel c) { return static_cast<double>(static_cast<int>(c)); }
inline ClassLabel flip(ClassLabel c) {
  return c == ClassLabel::Positive ? ClassLabel::Negative : ClassLabel::Positive;
}

// Nominal value used for empty or "?" cells.
inline constexpr std::string_view kMissingNominal = "?";

struct Attribute {
  std::string name;
  AttributeKind kind;
};

// Ordered attribute list with exactly one target. Attribute numbers shown to
// users are 1-based schema positions, so "attribute 1" is column 0.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<Attribute> attributes, std::string positive_label);

  // Sidecar format: `name = nominal|numeric|identifier|target` lines plus one
  // `positive_label = <text>` line; `#` starts a comment.
  static Schema parse(std::string_view text);
  static Schema load(const std::filesystem::path& path);
  std::string to_text() const;

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& attribute(std::size_t column) const { return attributes_.at(column); }
  const std::string& positive_label() const { return positive_label_; }
  std::size_t size() const { return attributes_.size(); }

  std::size_t target_column() const { return target_column_; }
  const std::vector<std::size_t>& nominal_columns() const { return nominal_columns_; }
  const std::vector<std::size_t>& numeric_columns() const { return numeric_columns_; }
  const std::vector<std::size_t>& identifier_columns() const { return identifier_columns_; }

  std::optional<std::size_t> find(std::string_view name) const;
  // Position of a nominal column inside Record::nominal.
  std::size_t nominal_slot(std::size_t column) const;
  // Resolves a user-supplied attribute reference: a name or a 1-based number.
  std::size_t resolve(std::string_view name_or_number) const;

  std::uint64_t fingerprint() const;

  bool operator==(const Schema& other) const;

 private:
  std::vector<Attribute> attributes_;
  std::string positive_label_;
  std::size_t target_column_ = 0;
  std::vector<std::size_t> nominal_columns_;
  std::vector<std::size_t> numeric_columns_;
  std::vector<std::size_t> identifier_columns_;
};

struct Record {
  std::vector<std::string> nominal;  // schema order of nominal columns
  std::vector<double> numeric;       // schema order of numeric columns
  std::vector<std::string> identifiers;
  std::optional<ClassLabel> target;

  Eigen::VectorXd numeric_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(numeric.data(), static_cast<Eigen::Index>(numeric.size()));
  }
};

class DataTable {
 public:
  DataTable() = default;
  explicit DataTable(Schema schema, std::vector<Record> rows = {});

  const Schema& schema() const { return schema_; }
  std::span<const Record> rows() const { return rows_; }
  const Record& operator[](std::size_t i) const { return rows_[i]; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t numeric_width() const { return schema_.numeric_columns().size(); }

  DataTable subset(std::span<const std::size_t> indices) const;
  // rows x numeric attributes
  Eigen::MatrixXd numeric_matrix() const;
  // Throws UnknownTargetLabel when a row has no target.
  std::vector<ClassLabel> targets() const;

 private:
  Schema schema_;
  std::vector<Record> rows_;
};

enum class TargetRequirement { Required, Optional };

DataTable read_table(std::istream& in, const Schema& schema,
                     TargetRequirement requirement = TargetRequirement::Required);
DataTable load_table(const std::filesystem::path& path, const Schema& schema,
                     TargetRequirement requirement = TargetRequirement::Required);

struct FoldSplit {
  std::size_t fold_index = 0;
  DataTable train;
  DataTable validation;
};

// Fold id per row: a seeded shuffle cut into k contiguous chunks whose sizes
// differ by at most one.
std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t k, std::uint64_t seed);
std::vector<FoldSplit> split_folds(const DataTable& table, std::size_t k, std::uint64_t seed);

// Z-score statistics (population stddev). A feature is constant iff its
// stddev is exactly zero; constant features normalize to 0.
struct NormalizationParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
  bool is_constant(std::size_t i) const { return stddev[static_cast<Eigen::Index>(i)] == 0.0; }
};

NormalizationParams fit_normalizer(const Eigen::MatrixXd& rows);
Eigen::VectorXd apply_normalizer(const NormalizationParams& params, const Eigen::VectorXd& row);
Eigen::MatrixXd apply_normalizer(const NormalizationParams& params, const Eigen::MatrixXd& rows);
// Constant features invert to their mean.
Eigen::VectorXd invert_normalizer(const NormalizationParams& params, const Eigen::VectorXd& row);

}  // namespace gkmnc
