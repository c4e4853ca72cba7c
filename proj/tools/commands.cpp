#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "gkmnc/bench.hpp"
#include "gkmnc/pipeline.hpp"
#include "gkmnc/seed.hpp"
#include "text.hpp"

namespace gkmnc::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

fs::path with_suffix(const fs::path& base, std::string_view suffix) { return fs::path(base.string() + std::string(suffix)); }

// key = value lines, written once per run
class Manifest {
 public:
  explicit Manifest(std::string command) { add("command", std::move(command)); }

  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
  void add_seconds(std::string key, double s) { add(std::move(key), text::format_fixed(std::max(0.0, s), 6)); }

  void add_config(const PipelineConfig& config) {
    std::istringstream in(config.to_text());
    for (std::string line; std::getline(in, line);) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      add("config." + std::string(text::trim(std::string_view(line).substr(0, eq))),
          std::string(text::trim(std::string_view(line).substr(eq + 1))));
    }
  }

  void add_dataset(std::string prefix, const fs::path& path, const DataTable& table) {
    add(prefix + ".path", path.string());
    add(prefix + ".rows", std::to_string(table.size()));
    add(prefix + ".schema_hash", hex(table.schema().fingerprint()));
  }

  void write(const fs::path& path) const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    write_file(path, out);
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct Common {
  std::string data;
  std::string schema;
  std::string config;
  std::string out;
  std::string manifest;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

fs::path manifest_path(const Common& c, std::string_view command) {
  if (!c.manifest.empty()) return c.manifest;
  if (!c.out.empty()) return with_suffix(c.out, ".manifest");
  return "gkmnc-" + std::string(command) + ".manifest";
}

template <class Int>
std::optional<Int> env_number(const char* name) {
  const char* raw = std::getenv(name);
  if (!raw || !*raw) return std::nullopt;
  const auto v = text::parse_int<Int>(raw);
  if (!v) throw UsageError(std::string(name) + " must be a non-negative integer, got '" + raw + "'");
  return v;
}

// config file, then environment, then --set, then explicit flags
PipelineConfig resolve_config(const Common& c, const std::string& config_path) {
  PipelineConfig config = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
  if (const auto s = env_number<std::uint64_t>("GKMNC_SEED")) config.seed = *s;
  if (const auto w = env_number<std::size_t>("GKMNC_WORKERS")) config.worker_count = *w;
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) config.seed = *c.seed;
  if (c.workers) config.worker_count = *c.workers;
  config.validate();
  return config;
}

void add_config_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline config file (key = value lines)");
  cmd->add_option("--set", c.sets, "Override one config key, key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--workers", c.workers, "Leaf-training worker threads")->check(CLI::PositiveNumber);
}

void add_manifest_flag(CLI::App* cmd, Common& c) {
  cmd->add_option("--manifest", c.manifest, "Manifest path (default: <out>.manifest)");
}

// ---------------------------------------------------------------- commands

int cmd_train(const Common& c, const std::string& validation_path, std::ostream& out) {
  const auto start = Clock::now();
  const auto config = resolve_config(c, c.config);
  const auto schema = Schema::load(c.schema);
  const auto table = load_table(c.data, schema);
  std::optional<DataTable> validation;
  if (!validation_path.empty()) validation = load_table(validation_path, schema);
  const double load_seconds = seconds_since(start);

  const auto result = train_gkmnc(table, validation, config);
  const auto& report = result.report;
  const fs::path model_path = c.out;
  save_model(result.model, model_path);

  Manifest manifest("train");
  manifest.add_config(config);
  manifest.add("seed", std::to_string(config.seed));
  manifest.add_dataset("data", c.data, table);
  if (validation) manifest.add_dataset("validation", validation_path, *validation);
  manifest.add("model.name", result.model.name());
  manifest.add("model.leaves", std::to_string(result.model.leaf_count()));
  manifest.add("output.model", model_path.string());

  std::vector<std::pair<std::string, std::string>> reports;
  if (report.gain_ratios) reports.emplace_back(".gain_ratios.csv", report.gain_ratios->to_csv());
  reports.emplace_back(".groups.csv", report.groups_csv());
  reports.emplace_back(".leaves.csv", report.leaves_csv());
  if (!report.hidden_search.empty()) reports.emplace_back(".hidden.csv", report.hidden_csv());
  for (const auto& [suffix, content] : reports) {
    const auto path = with_suffix(model_path, suffix);
    write_file(path, content);
    manifest.add("output" + std::string(suffix).substr(0, suffix.size() - 4), path.string());
  }

  manifest.add_seconds("timing.load_seconds", load_seconds);
  manifest.add_seconds("timing.structure_seconds", report.structure_seconds);
  manifest.add_seconds("timing.leaf_wall_seconds", report.leaf_wall_seconds);
  manifest.add_seconds("timing.train_seconds", report.total_seconds);
  for (const auto& l : report.leaves)
    manifest.add_seconds("timing.leaf." + l.group + "." + std::to_string(l.cluster) + ".seconds", l.seconds);
  manifest.add_seconds("timing.total_seconds", seconds_since(start));
  manifest.write(manifest_path(c, "train"));

  out << "model," << result.model.name() << "\n";
  out << "leaves," << result.model.leaf_count() << "\n";
  if (report.hidden_size) out << "hidden_size," << *report.hidden_size << "\n";
  if (report.gain_ratios) out << "\n" << report.gain_ratios->to_csv();
  return kOk;
}

int cmd_predict(const Common& c, const std::string& model_path, std::ostream& out) {
  const auto start = Clock::now();
  const auto model = load_model(model_path);
  Manifest manifest("predict");
  manifest.add("model.path", model_path);
  manifest.add("model.name", model.name());

  std::string csv;
  std::size_t rows = 0;
  if (fs::exists(c.data) && fs::file_size(c.data) == 0) {
    // nothing to predict
  } else {
    const auto table = load_table(c.data, model.schema, TargetRequirement::Optional);
    rows = table.size();
    csv = "row,class,probability,group,cluster,unseen_label\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto f = forecast(model, table[i]);
      csv += std::to_string(i) + "," + (f.label == ClassLabel::Positive ? "1" : "-1") + "," +
             (f.probability ? text::format_fixed(*f.probability, 6) : std::string()) + "," +
             text::csv_escape(f.route.group) + "," + std::to_string(f.route.cluster) + "," +
             (f.route.unseen_label ? "1" : "0") + "\n";
    }
  }
  if (c.out.empty()) {
    out << csv;
  } else {
    write_file(c.out, csv);
    manifest.add("output.predictions", c.out);
  }
  manifest.add("data.path", c.data);
  manifest.add("data.rows", std::to_string(rows));
  manifest.add("data.schema_hash", hex(model.schema.fingerprint()));
  manifest.add_seconds("timing.total_seconds", seconds_since(start));
  manifest.write(manifest_path(c, "predict"));
  return kOk;
}

int cmd_evaluate(const Common& c, const std::string& model_path, std::ostream& out) {
  const auto start = Clock::now();
  const auto model = load_model(model_path);
  const auto table = load_table(c.data, model.schema);
  const auto report = evaluate(model, table);
  const auto csv = report.to_csv();
  out << csv;
  Manifest manifest("evaluate");
  manifest.add("model.path", model_path);
  manifest.add("model.name", model.name());
  manifest.add_dataset("data", c.data, table);
  if (!c.out.empty()) {
    write_file(c.out, csv);
    manifest.add("output.report", c.out);
  }
  manifest.add_seconds("timing.total_seconds", seconds_since(start));
  manifest.write(manifest_path(c, "evaluate"));
  return kOk;
}

int cmd_crossval(const Common& c, std::size_t folds, std::ostream& out) {
  if (folds < 2) throw UsageError("--folds must be at least 2");
  const auto start = Clock::now();
  const auto config = resolve_config(c, c.config);
  const auto table = load_table(c.data, Schema::load(c.schema));
  const auto report = cross_validate(table, folds, config);
  const auto csv = report.to_csv();
  out << csv;
  Manifest manifest("crossval");
  manifest.add_config(config);
  manifest.add("seed", std::to_string(config.seed));
  manifest.add("folds", std::to_string(folds));
  manifest.add_dataset("data", c.data, table);
  if (!c.out.empty()) {
    write_file(c.out, csv);
    manifest.add("output.report", c.out);
  }
  manifest.add_seconds("timing.total_seconds", seconds_since(start));
  manifest.write(manifest_path(c, "crossval"));
  return kOk;
}

struct BenchArgs {
  std::vector<std::string> configs;
  std::vector<std::size_t> workers{1};
  std::vector<std::size_t> scaling_sizes;
  std::size_t repeats = 3;
};

int cmd_bench(const Common& c, const BenchArgs& b, std::ostream& out) {
  const auto start = Clock::now();
  if (b.configs.empty()) throw UsageError("--config-list needs at least one config");
  const auto table = load_table(c.data, Schema::load(c.schema));
  Manifest manifest("bench");
  manifest.add_dataset("data", c.data, table);

  std::vector<BenchRow> rows;
  std::vector<std::pair<std::string, std::string>> slopes;  // label, line
  for (const auto& path : b.configs) {
    const auto config = resolve_config(c, path);
    const auto label = fs::path(path).stem().string();
    manifest.add("config_file." + label, path);
    for (const auto w : b.workers) rows.push_back(bench_once(table, config, w, label));

    const std::string kind(to_string(config.classifier));
    if (!b.scaling_sizes.empty()) {
      const auto points = measure_scaling(table, config, b.scaling_sizes, b.repeats);
      for (const auto& p : points)
        manifest.add_seconds("timing.scaling." + label + "." + std::to_string(p.n), p.seconds);
      slopes.emplace_back(label, kind + ",universal," + std::to_string(points.size()) + "," +
                                     text::format_fixed(scaling_slope(points), 4));
    } else {
      std::vector<std::pair<double, double>> leaf_points;
      for (const auto& r : rows)
        if (r.label == label)
          for (const auto& l : r.leaves)
            if (l.rows > 0 && l.seconds > 0.0) leaf_points.emplace_back(static_cast<double>(l.rows), l.seconds);
      std::string slope;
      try {
        slope = text::format_fixed(loglog_slope(leaf_points), 4);
      } catch (const Error&) {
        // all leaves the same size
      }
      slopes.emplace_back(label, kind + ",leaves," + std::to_string(leaf_points.size()) + "," + slope);
    }
  }

  std::string csv = bench_csv(rows);
  csv += "\nlabel,classifier,source,points,loglog_slope\n";
  for (const auto& [label, line] : slopes) csv += text::csv_escape(label) + "," + line + "\n";
  out << csv;
  if (!c.out.empty()) {
    write_file(c.out, csv);
    manifest.add("output.report", c.out);
  }
  for (const auto& r : rows) {
    const auto key = "timing." + r.label + ".workers" + std::to_string(r.workers);
    manifest.add_seconds(key + ".total_seconds", r.total_seconds);
    manifest.add_seconds(key + ".leaf_wall_seconds", r.leaf_wall_seconds);
  }
  manifest.add_seconds("timing.total_seconds", seconds_since(start));
  manifest.write(manifest_path(c, "bench"));
  return kOk;
}

int cmd_inspect(const Common& c, const std::string& group_attr, std::ostream& out) {
  const auto start = Clock::now();
  const auto config = resolve_config(c, c.config);
  const auto table = load_table(c.data, Schema::load(c.schema));
  const auto& schema = table.schema();

  std::string text_out = select_grouping_attribute(table, config.gain_ratio_threshold).report.to_csv();
  if (schema.nominal_columns().empty()) text_out += "# no nominal attributes; nothing to rank\n";

  if (!group_attr.empty()) {
    std::size_t column = 0;
    try {
      column = schema.resolve(group_attr);
    } catch (const Error& e) {
      throw UsageError(std::string("--group-attr: ") + e.what());
    }
    if (schema.attribute(column).kind != AttributeKind::Nominal)
      throw UsageError("--group-attr '" + schema.attribute(column).name + "' is not a nominal attribute");
    text_out += "\ngroup,rows,k,dbi\n";
    const KMeansOptions options{config.kmeans_restarts, 300};
    for (const auto& [label, part] : partition_by_attribute(table, column)) {
      const Eigen::MatrixXd raw = part.numeric_matrix();
      const Eigen::MatrixXd normalized = apply_normalizer(fit_normalizer(raw), raw);
      const auto prefix = text::csv_escape(label) + "," + std::to_string(part.size()) + ",";
      try {
        const auto sel = select_k(normalized, config.k_max, derive_seed(config.seed, "kmeans:" + label, 0), options);
        for (const auto& [k, dbi] : sel.dbi_curve) text_out += prefix + std::to_string(k) + "," + text::format_fixed(dbi, 6) + "\n";
      } catch (const Error& e) {
        if (e.code() != ErrorCode::KExceedsRows) throw;
        text_out += prefix + "1,\n";
      }
    }
  }
  out << text_out;

  Manifest manifest("inspect");
  manifest.add_config(config);
  manifest.add_dataset("data", c.data, table);
  if (!c.out.empty()) {
    write_file(c.out, text_out);
    manifest.add("output.report", c.out);
  }
  manifest.add_seconds("timing.total_seconds", seconds_since(start));
  manifest.write(manifest_path(c, "inspect"));
  return kOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::KTooLarge:
      return kUsage;
    case ErrorCode::MissingColumn:
    case ErrorCode::TypeMismatch:
    case ErrorCode::UnknownTargetLabel:
    case ErrorCode::EmptyInput:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::AllZero:
    case ErrorCode::SplitInfoZero:
    case ErrorCode::NoNominalAttributes:
    case ErrorCode::UnseenNominalLabel:
    case ErrorCode::EmptyValidation:
    case ErrorCode::ZeroTotal:
    case ErrorCode::EmptyData:
      return kDataError;
    case ErrorCode::KExceedsRows:
    case ErrorCode::SingleCluster:
    case ErrorCode::EmptyCentroidList:
    case ErrorCode::NoBracketFound:
    case ErrorCode::InvalidInterval:
    case ErrorCode::CholeskyFailure:
    case ErrorCode::NonConvergence:
    case ErrorCode::PartitionTooLarge:
    case ErrorCode::LeafTrainingFailed:
      return kTrainingError;
    case ErrorCode::Io:
    case ErrorCode::FormatVersionMismatch:
    case ErrorCode::CorruptFile:
      return kIoError;
  }
  return kInternal;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grouped, clustered nonlinear classifiers for tabular data", "gkmnc"};
  app.require_subcommand(1);

  Common c;
  std::string model_path;
  std::string validation_path;
  std::string group_attr;
  std::size_t folds = 10;
  BenchArgs bench;

  auto* train = app.add_subcommand("train", "Train a model and write it with its reports");
  train->add_option("--data", c.data, "Training CSV")->required();
  train->add_option("--schema", c.schema, "Schema file")->required();
  train->add_option("--out", c.out, "Model output path")->required();
  train->add_option("--validation", validation_path, "Validation CSV used for the hidden-size search");
  add_config_flags(train, c);
  add_manifest_flag(train, c);

  auto* predict = app.add_subcommand("predict", "Forecast every row of a CSV");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--data", c.data, "Input CSV")->required();
  predict->add_option("--out", c.out, "Predictions CSV (default: stdout)");
  add_manifest_flag(predict, c);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Accuracy of a saved model on a labelled CSV");
  evaluate_cmd->add_option("--model", model_path, "Model file")->required();
  evaluate_cmd->add_option("--data", c.data, "Labelled CSV")->required();
  evaluate_cmd->add_option("--out", c.out, "Report CSV");
  add_manifest_flag(evaluate_cmd, c);

  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation");
  crossval->add_option("--data", c.data, "Labelled CSV")->required();
  crossval->add_option("--schema", c.schema, "Schema file")->required();
  crossval->add_option("--folds", folds, "Fold count (>= 2)");
  crossval->add_option("--out", c.out, "Report CSV");
  add_config_flags(crossval, c);
  add_manifest_flag(crossval, c);

  auto* bench_cmd = app.add_subcommand("bench", "Per-leaf and total training time per config and worker count");
  bench_cmd->add_option("--data", c.data, "Training CSV")->required();
  bench_cmd->add_option("--schema", c.schema, "Schema file")->required();
  bench_cmd->add_option("--config-list", bench.configs, "Config files, comma separated")->required()->delimiter(',');
  bench_cmd->add_option("--workers-list", bench.workers, "Worker counts, comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--scaling-sizes", bench.scaling_sizes, "Row counts for the universal timing fit")
      ->delimiter(',');
  bench_cmd->add_option("--repeats", bench.repeats, "Timing repeats per size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", c.out, "Report CSV");
  bench_cmd->add_option("--set", c.sets, "Override one config key, key=value (repeatable)");
  bench_cmd->add_option("--seed", c.seed, "Master seed");
  add_manifest_flag(bench_cmd, c);

  auto* inspect = app.add_subcommand("inspect", "Gain-ratio table and optional per-group DBI curves");
  inspect->add_option("--data", c.data, "Labelled CSV")->required();
  inspect->add_option("--schema", c.schema, "Schema file")->required();
  inspect->add_option("--group-attr", group_attr, "Nominal attribute (name or 1-based number) to group by");
  inspect->add_option("--out", c.out, "Report path");
  add_config_flags(inspect, c);
  add_manifest_flag(inspect, c);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    for (const auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(c, validation_path, out);
    if (predict->parsed()) return cmd_predict(c, model_path, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(c, model_path, out);
    if (crossval->parsed()) return cmd_crossval(c, folds, out);
    if (bench_cmd->parsed()) return cmd_bench(c, bench, out);
    if (inspect->parsed()) return cmd_inspect(c, group_attr, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace gkmnc::cli
