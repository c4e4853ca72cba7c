#include "gkmnc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "gkmnc/error.hpp"
#include "gkmnc/seed.hpp"
#include "text.hpp"

namespace gkmnc {

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Nominal: return "nominal";
    case AttributeKind::Numeric: return "numeric";
    case AttributeKind::Identifier: return "identifier";
    case AttributeKind::Target: return "target";
  }
  return "unknown";
}

AttributeKind parse_attribute_kind(std::string_view text) {
  const auto t = text::trim(text);
  if (t == "nominal") return AttributeKind::Nominal;
  if (t == "numeric") return AttributeKind::Numeric;
  if (t == "identifier") return AttributeKind::Identifier;
  if (t == "target") return AttributeKind::Target;
  throw Error(ErrorCode::InvalidArgument, "unknown attribute kind '" + std::string(t) + "'");
}

// ---------------------------------------------------------------- Schema

Schema::Schema(std::vector<Attribute> attributes, std::string positive_label)
    : attributes_(std::move(attributes)), positive_label_(std::move(positive_label)) {
  std::set<std::string> seen;
  std::size_t targets = 0;
  for (std::size_t c = 0; c < attributes_.size(); ++c) {
    const auto& a = attributes_[c];
    if (a.name.empty()) throw Error(ErrorCode::InvalidArgument, "empty attribute name");
    if (!seen.insert(a.name).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate attribute name '" + a.name + "'");
    switch (a.kind) {
      case AttributeKind::Nominal: nominal_columns_.push_back(c); break;
      case AttributeKind::Numeric: numeric_columns_.push_back(c); break;
      case AttributeKind::Identifier: identifier_columns_.push_back(c); break;
      case AttributeKind::Target:
        target_column_ = c;
        ++targets;
        break;
    }
  }
  if (targets != 1)
    throw Error(ErrorCode::InvalidArgument,
                "schema must declare exactly one target attribute (found " + std::to_string(targets) + ")");
  if (numeric_columns_.empty())
    throw Error(ErrorCode::InvalidArgument, "schema must declare at least one numeric attribute");
  if (positive_label_.empty()) throw Error(ErrorCode::InvalidArgument, "schema has no positive_label");
}

Schema Schema::parse(std::string_view content) {
  std::vector<Attribute> attributes;
  std::string positive;
  std::size_t line_no = 0;
  std::istringstream in{std::string(content)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidArgument, "schema line " + std::to_string(line_no) + ": expected 'name = kind'");
    const auto key = text::trim(view.substr(0, eq));
    const auto value = text::trim(view.substr(eq + 1));
    if (key == "positive_label") {
      positive = std::string(value);
    } else {
      attributes.push_back({std::string(key), parse_attribute_kind(value)});
    }
  }
  return Schema(std::move(attributes), std::move(positive));
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string Schema::to_text() const {
  std::string out;
  for (const auto& a : attributes_) {
    out += a.name;
    out += " = ";
    out += to_string(a.kind);
    out += '\n';
  }
  out += "positive_label = " + positive_label_ + "\n";
  return out;
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t c = 0; c < attributes_.size(); ++c)
    if (attributes_[c].name == name) return c;
  return std::nullopt;
}

std::size_t Schema::nominal_slot(std::size_t column) const {
  const auto it = std::find(nominal_columns_.begin(), nominal_columns_.end(), column);
  if (it == nominal_columns_.end())
    throw Error(ErrorCode::InvalidArgument, "attribute " + std::to_string(column + 1) + " is not nominal");
  return static_cast<std::size_t>(it - nominal_columns_.begin());
}

std::size_t Schema::resolve(std::string_view name_or_number) const {
  if (const auto c = find(name_or_number)) return *c;
  if (const auto n = text::parse_int<std::size_t>(name_or_number); n && *n >= 1 && *n <= attributes_.size())
    return *n - 1;
  throw Error(ErrorCode::InvalidArgument, "unknown attribute '" + std::string(name_or_number) + "'");
}

std::uint64_t Schema::fingerprint() const { return fnv1a(to_text()); }

bool Schema::operator==(const Schema& other) const {
  if (positive_label_ != other.positive_label_ || attributes_.size() != other.attributes_.size()) return false;
  for (std::size_t i = 0; i < attributes_.size(); ++i)
    if (attributes_[i].name != other.attributes_[i].name || attributes_[i].kind != other.attributes_[i].kind)
      return false;
  return true;
}

// ---------------------------------------------------------------- DataTable

DataTable::DataTable(Schema schema, std::vector<Record> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (r.nominal.size() != schema_.nominal_columns().size() || r.numeric.size() != schema_.numeric_columns().size() ||
        r.identifiers.size() != schema_.identifier_columns().size())
      throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(i) + " does not match schema arity");
  }
}

DataTable DataTable::subset(std::span<const std::size_t> indices) const {
  std::vector<Record> rows;
  rows.reserve(indices.size());
  for (auto i : indices) rows.push_back(rows_.at(i));
  DataTable out;
  out.schema_ = schema_;
  out.rows_ = std::move(rows);
  return out;
}

Eigen::MatrixXd DataTable::numeric_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(numeric_width()));
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (std::size_t j = 0; j < numeric_width(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows_[i].numeric[j];
  return m;
}

std::vector<ClassLabel> DataTable::targets() const {
  std::vector<ClassLabel> out;
  out.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!rows_[i].target) throw Error(ErrorCode::UnknownTargetLabel, "row " + std::to_string(i) + " has no target");
    out.push_back(*rows_[i].target);
  }
  return out;
}

// ---------------------------------------------------------------- loading

DataTable read_table(std::istream& in, const Schema& schema, TargetRequirement requirement) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, "input has no header row");
  const auto header = text::split_csv(line);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(header[i], i);

  // file column for each schema attribute; target may be absent when optional
  std::vector<std::optional<std::size_t>> source(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& a = schema.attribute(c);
    if (auto it = position.find(a.name); it != position.end()) {
      source[c] = it->second;
    } else if (!(a.kind == AttributeKind::Target && requirement == TargetRequirement::Optional)) {
      throw Error(ErrorCode::MissingColumn, "column '" + a.name + "' not found in header");
    }
  }

  std::vector<Record> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_csv(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::TypeMismatch, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(header.size()) + " fields, got " +
                                               std::to_string(fields.size()));
    Record r;
    r.nominal.reserve(schema.nominal_columns().size());
    r.numeric.reserve(schema.numeric_columns().size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (!source[c]) continue;
      const auto& a = schema.attribute(c);
      const std::string& cell = fields[*source[c]];
      switch (a.kind) {
        case AttributeKind::Nominal:
          r.nominal.push_back(cell.empty() ? std::string(kMissingNominal) : cell);
          break;
        case AttributeKind::Numeric: {
          const auto v = text::parse_double(cell);
          if (!v)
            throw Error(ErrorCode::TypeMismatch, "line " + std::to_string(line_no) + ", column '" + a.name +
                                                     "': '" + cell + "' is not a number");
          r.numeric.push_back(*v);
          break;
        }
        case AttributeKind::Identifier: r.identifiers.push_back(cell); break;
        case AttributeKind::Target:
          if (cell.empty() || cell == kMissingNominal) {
            if (requirement == TargetRequirement::Required)
              throw Error(ErrorCode::UnknownTargetLabel,
                          "line " + std::to_string(line_no) + ": missing target in column '" + a.name + "'");
          } else {
            r.target = cell == schema.positive_label() ? ClassLabel::Positive : ClassLabel::Negative;
          }
          break;
      }
    }
    rows.push_back(std::move(r));
  }
  return DataTable(schema, std::move(rows));
}

DataTable load_table(const std::filesystem::path& path, const Schema& schema, TargetRequirement requirement) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open data file " + path.string());
  return read_table(in, schema, requirement);
}

// ---------------------------------------------------------------- folds

std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "fold count must be at least 2");
  if (k > rows)
    throw Error(ErrorCode::KTooLarge,
                "fold count " + std::to_string(k) + " exceeds row count " + std::to_string(rows));
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> fold(rows);
  const std::size_t base = rows / k;
  const std::size_t extra = rows % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < len; ++i) fold[order[pos++]] = f;
  }
  return fold;
}

std::vector<FoldSplit> split_folds(const DataTable& table, std::size_t k, std::uint64_t seed) {
  const auto fold = fold_assignment(table.size(), k, seed);
  std::vector<FoldSplit> out;
  out.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, validation;
    for (std::size_t i = 0; i < table.size(); ++i) (fold[i] == f ? validation : train).push_back(i);
    out.push_back({f, table.subset(train), table.subset(validation)});
  }
  return out;
}

// ---------------------------------------------------------------- normalization

NormalizationParams fit_normalizer(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit a normalizer on zero rows");
  const auto n = static_cast<double>(rows.rows());
  NormalizationParams p;
  p.mean = rows.colwise().sum().transpose() / n;
  p.stddev.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const auto col = rows.col(j);
    if (col.minCoeff() == col.maxCoeff()) {
      p.mean[j] = col[0];
      p.stddev[j] = 0.0;
      continue;
    }
    p.stddev[j] = std::sqrt((col.array() - p.mean[j]).square().sum() / n);
  }
  return p;
}

Eigen::VectorXd apply_normalizer(const NormalizationParams& params, const Eigen::VectorXd& row) {
  if (static_cast<std::size_t>(row.size()) != params.size())
    throw Error(ErrorCode::DimensionMismatch, "normalizer expects " + std::to_string(params.size()) +
                                                  " features, got " + std::to_string(row.size()));
  Eigen::VectorXd out(row.size());
  for (Eigen::Index j = 0; j < row.size(); ++j)
    out[j] = params.stddev[j] == 0.0 ? 0.0 : (row[j] - params.mean[j]) / params.stddev[j];
  return out;
}

Eigen::MatrixXd apply_normalizer(const NormalizationParams& params, const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != params.size())
    throw Error(ErrorCode::DimensionMismatch, "normalizer expects " + std::to_string(params.size()) +
                                                  " features, got " + std::to_string(rows.cols()));
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    if (params.stddev[j] == 0.0)
      out.col(j).setZero();
    else
      out.col(j) = (rows.col(j).array() - params.mean[j]) / params.stddev[j];
  }
  return out;
}

Eigen::VectorXd invert_normalizer(const NormalizationParams& params, const Eigen::VectorXd& row) {
  if (static_cast<std::size_t>(row.size()) != params.size())
    throw Error(ErrorCode::DimensionMismatch, "normalizer dimension mismatch");
  Eigen::VectorXd out(row.size());
  for (Eigen::Index j = 0; j < row.size(); ++j)
    out[j] = params.stddev[j] == 0.0 ? params.mean[j] : row[j] * params.stddev[j] + params.mean[j];
  return out;
}

}  // namespace gkmnc
