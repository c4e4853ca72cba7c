#include "gkmnc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "gkmnc/error.hpp"
#include "gkmnc/parallel.hpp"
#include "gkmnc/seed.hpp"
#include "text.hpp"

namespace gkmnc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct LeafPlan {
  std::string group;
  std::size_t cluster = 0;
  std::vector<std::size_t> rows;  // indices into the training table
};

// Everything the pipeline decides before any classifier is trained.
struct Structure {
  std::optional<std::size_t> grouping_column;
  std::optional<GainRatioReport> gain_ratios;
  std::map<std::string, GroupNode> groups;  // leaves still empty
  std::vector<LeafPlan> leaves;             // group label order, then cluster index
  std::vector<GroupTrainInfo> infos;
};

std::optional<ClusterModel> cluster_group(const Eigen::MatrixXd& normalized, const std::string& label,
                                          const PipelineConfig& config, GroupTrainInfo& info) {
  const KMeansOptions options{config.kmeans_restarts, 300};
  const auto seed = derive_seed(config.seed, "kmeans:" + label, 0);
  const auto rows = static_cast<std::size_t>(normalized.rows());
  switch (config.clustering) {
    case ClusteringMode::Off: return std::nullopt;
    case ClusteringMode::Fixed: {
      const auto it = config.group_k.find(label);
      const std::size_t k = it != config.group_k.end() ? it->second : config.fixed_k;
      if (k < 2) return std::nullopt;
      try {
        auto model = kmeans_fit(normalized, k, seed, options);
        info.dbi_curve.emplace_back(k, *model.dbi);
        return model;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::KExceedsRows) throw;
        info.clustering_note = "fewer distinct points than k; kept as one leaf";
        return std::nullopt;
      }
    }
    case ClusteringMode::Auto: {
      if (rows < config.min_partition_rows) {
        info.clustering_note = "below min_partition_rows";
        return std::nullopt;
      }
      KSelection selection;
      try {
        selection = select_k(normalized, config.k_max, seed, options);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::KExceedsRows) throw;
        info.clustering_note = "fewer than two distinct points";
        return std::nullopt;
      }
      info.dbi_curve = selection.dbi_curve;
      const auto& curve = selection.dbi_curve;
      bool strictly_decreasing = true;
      for (std::size_t i = 1; i < curve.size(); ++i)
        strictly_decreasing = strictly_decreasing && curve[i].second < curve[i - 1].second;
      if (curve.size() > 1 && strictly_decreasing && selection.chosen.k == curve.back().first) {
        info.clustering_note = "no interior DBI minimum";
        return std::nullopt;
      }
      return std::move(selection.chosen);
    }
  }
  return std::nullopt;
}

Structure build_structure(const DataTable& train, const PipelineConfig& config) {
  if (train.empty()) throw Error(ErrorCode::EmptyData, "training table is empty");
  Structure s;
  const auto& schema = train.schema();

  if (config.grouping != GroupingMode::Off && !schema.nominal_columns().empty()) {
    auto selection = select_grouping_attribute(train, config.gain_ratio_threshold);
    s.gain_ratios = std::move(selection.report);
    if (config.grouping == GroupingMode::Auto) {
      s.grouping_column = selection.column;
    } else {
      const auto column = schema.resolve(config.grouping_attribute);
      if (schema.attribute(column).kind != AttributeKind::Nominal)
        throw Error(ErrorCode::InvalidArgument,
                    "grouping attribute '" + schema.attribute(column).name + "' is not nominal");
      s.grouping_column = column;
    }
  } else if (config.grouping == GroupingMode::Fixed) {
    throw Error(ErrorCode::NoNominalAttributes, "grouping = fixed but the schema has no nominal attributes");
  }

  std::map<std::string, std::vector<std::size_t>> members;
  if (s.grouping_column) {
    const auto slot = schema.nominal_slot(*s.grouping_column);
    for (std::size_t i = 0; i < train.size(); ++i) members[train[i].nominal[slot]].push_back(i);
  } else {
    auto& all = members[std::string(kAllRowsGroup)];
    all.resize(train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
  }

  for (const auto& [label, rows] : members) {
    GroupNode node;
    node.label = label;
    node.training_rows = rows.size();
    const Eigen::MatrixXd raw = train.subset(rows).numeric_matrix();
    node.normalizer = fit_normalizer(raw);
    GroupTrainInfo info;
    info.label = label;
    info.rows = rows.size();
    node.clusters = cluster_group(apply_normalizer(node.normalizer, raw), label, config, info);
    info.chosen_k = node.clusters ? node.clusters->k : 1;
    if (node.clusters) {
      std::vector<LeafPlan> plans(node.clusters->k);
      for (std::size_t c = 0; c < plans.size(); ++c) plans[c] = {label, c, {}};
      for (std::size_t i = 0; i < rows.size(); ++i) plans[node.clusters->assignments[i]].rows.push_back(rows[i]);
      for (auto& p : plans) s.leaves.push_back(std::move(p));
    } else {
      s.leaves.push_back({label, 0, rows});
    }
    s.infos.push_back(std::move(info));
    s.groups.emplace(label, std::move(node));
  }
  return s;
}

Classifier train_leaf(const DataTable& train, const LeafPlan& plan, const PipelineConfig& config,
                      std::size_t hidden_size) {
  const DataTable part = train.subset(plan.rows);
  const Eigen::MatrixXd raw = part.numeric_matrix();
  const auto targets = part.targets();
  const auto seed = derive_seed(config.seed, plan.group, plan.cluster);
  if (config.classifier == ClassifierKind::Mlp) {
    return mlp_train(raw, targets, MlpTrainOptions{hidden_size, seed, config.mlp_cg, config.line_search}).model;
  }
  GpcTrainOptions options;
  options.kernel = config.gpc_kernel;
  options.optimize_hyperparams = config.gpc_optimize_hyperparams;
  options.size_cap = config.gpc_size_cap;
  options.seed = seed;
  options.cg = config.gpc_cg;
  options.ls = config.line_search;
  return gpc_train(raw, targets, options).model;
}

struct LeafBatch {
  std::vector<LeafNode> leaves;
  std::vector<LeafTrainInfo> timings;
  double wall_seconds = 0.0;
};

LeafBatch train_leaves(const DataTable& train, const Structure& s, const PipelineConfig& config,
                       std::size_t hidden_size) {
  LeafBatch batch;
  const auto n = s.leaves.size();
  std::vector<std::optional<LeafNode>> slots(n);
  batch.timings.resize(n);
  const auto start = Clock::now();
  run_parallel(n, config.worker_count, [&](std::size_t i) {
    const auto& plan = s.leaves[i];
    const auto leaf_start = Clock::now();
    try {
      slots[i] = LeafNode{train_leaf(train, plan, config, hidden_size), plan.rows.size()};
    } catch (const Error& e) {
      throw Error(e.code(), "leaf (group " + plan.group + ", cluster " + std::to_string(plan.cluster) +
                                ") failed: " + e.what());
    }
    batch.timings[i] = {plan.group, plan.cluster, plan.rows.size(), seconds_since(leaf_start)};
  });
  batch.wall_seconds = seconds_since(start);
  for (auto& slot : slots) batch.leaves.push_back(std::move(*slot));
  return batch;
}

GkmncModel assemble(const DataTable& train, const Structure& s, std::vector<LeafNode> leaves,
                    const PipelineConfig& config, std::optional<std::size_t> hidden_size) {
  GkmncModel model;
  model.schema = train.schema();
  model.classifier = config.classifier;
  model.grouping_column = s.grouping_column;
  model.unseen_label_policy = config.unseen_label_policy;
  model.hidden_size = hidden_size;
  model.groups = s.groups;
  for (std::size_t i = 0; i < leaves.size(); ++i) model.groups.at(s.leaves[i].group).leaves.push_back(std::move(leaves[i]));
  return model;
}

std::pair<DataTable, DataTable> holdout_split(const DataTable& train, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, "holdout", 0));
  std::shuffle(order.begin(), order.end(), rng);
  const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(train.size())));
  if (held >= train.size())
    throw Error(ErrorCode::EmptyData, "too few training rows to hold out a validation slice");
  std::vector<std::size_t> inner(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  std::sort(inner.begin(), inner.end());
  std::sort(holdout.begin(), holdout.end());
  return {train.subset(inner), train.subset(holdout)};
}

}  // namespace

// ---------------------------------------------------------------- model

std::string GkmncModel::name() const {
  std::string out;
  if (grouping_column) out += "G" + std::to_string(*grouping_column + 1) + "-";
  const bool clustered =
      std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.second.clusters.has_value(); });
  if (clustered) {
    if (!grouping_column) out += "KM";
    out += "[";
    bool first = true;
    for (const auto& [label, g] : groups) {
      out += (first ? "" : ",") + std::to_string(g.clusters ? g.clusters->k : 1);
      first = false;
    }
    out += "]-";
  }
  out += to_string(classifier);
  return out;
}

std::size_t GkmncModel::leaf_count() const {
  std::size_t n = 0;
  for (const auto& [label, g] : groups) n += g.leaves.size();
  return n;
}

const std::string& GkmncModel::largest_group() const {
  if (groups.empty()) throw Error(ErrorCode::EmptyData, "model has no groups");
  const GroupNode* best = nullptr;
  for (const auto& [label, g] : groups)
    if (!best || g.training_rows > best->training_rows) best = &g;
  return best->label;
}

// ---------------------------------------------------------------- forecast

LeafPrediction classify(const Classifier& classifier, const Eigen::VectorXd& raw_x) {
  if (const auto* mlp = std::get_if<MlpModel>(&classifier)) return {mlp_classify(*mlp, raw_x), std::nullopt};
  const auto& gpc = std::get<GpcModel>(classifier);
  const double p = gpc_predict_prob(gpc, raw_x);
  return {threshold_probability(p), p};
}

Route route(const GkmncModel& model, const Record& example) {
  if (example.numeric.size() != model.schema.numeric_columns().size())
    throw Error(ErrorCode::DimensionMismatch, "example has " + std::to_string(example.numeric.size()) +
                                                  " numeric values, model expects " +
                                                  std::to_string(model.schema.numeric_columns().size()));
  Route r;
  const GroupNode* group = nullptr;
  if (model.grouping_column) {
    const auto slot = model.schema.nominal_slot(*model.grouping_column);
    if (slot >= example.nominal.size()) throw Error(ErrorCode::DimensionMismatch, "example lacks nominal values");
    const auto& label = example.nominal[slot];
    if (auto it = model.groups.find(label); it != model.groups.end()) {
      group = &it->second;
    } else if (model.unseen_label_policy == UnseenLabelPolicy::RouteToLargestGroup) {
      group = &model.groups.at(model.largest_group());
      r.unseen_label = true;
    } else {
      throw Error(ErrorCode::UnseenNominalLabel,
                  "label '" + label + "' of attribute '" + model.schema.attribute(*model.grouping_column).name +
                      "' was not seen in training");
    }
  } else {
    group = &model.groups.begin()->second;
  }
  r.group = group->label;
  if (group->clusters)
    r.cluster = assign(group->clusters->centroids, apply_normalizer(group->normalizer, example.numeric_vector()));
  return r;
}

Forecast forecast(const GkmncModel& model, const Record& example) {
  Forecast f;
  f.route = route(model, example);
  const auto& leaf = model.groups.at(f.route.group).leaves.at(f.route.cluster);
  const auto p = classify(leaf.classifier, example.numeric_vector());
  f.label = p.label;
  f.probability = p.probability;
  return f;
}

// ---------------------------------------------------------------- training

TrainResult train_gkmnc(const DataTable& train, const std::optional<DataTable>& validation,
                        const PipelineConfig& config) {
  config.validate();
  const auto start = Clock::now();
  TrainResult result;
  auto& report = result.report;

  const auto structure = build_structure(train, config);
  report.structure_seconds = seconds_since(start);
  report.gain_ratios = structure.gain_ratios;
  report.grouping_column = structure.grouping_column;
  report.groups = structure.infos;

  std::optional<std::size_t> hidden = config.hidden_size;
  std::optional<GkmncModel> final_model;
  LeafBatch final_batch;

  if (config.classifier == ClassifierKind::Mlp && !hidden) {
    // Same hidden size for every leaf; choose it on validation rows, or on
    // a held-out slice of the training rows when none are given.
    PipelineConfig search_config = config;
    search_config.unseen_label_policy = UnseenLabelPolicy::RouteToLargestGroup;
    std::optional<std::pair<DataTable, DataTable>> inner;
    if (!validation || validation->empty()) inner = holdout_split(train, config.holdout_fraction, config.seed);
    const DataTable& search_train = inner ? inner->first : train;
    const DataTable& search_validation = inner ? inner->second : *validation;
    const Structure search_structure = inner ? build_structure(search_train, config) : structure;

    std::vector<std::optional<std::pair<GkmncModel, LeafBatch>>> trained(config.hidden_candidates.size());
    for (std::size_t c = 0; c < config.hidden_candidates.size(); ++c) {
      const auto h = config.hidden_candidates[c];
      auto batch = train_leaves(search_train, search_structure, config, h);
      auto candidate = assemble(search_train, search_structure, batch.leaves, search_config, h);
      report.hidden_search.emplace_back(h, evaluate(candidate, search_validation).overall_accuracy);
      if (!inner) {
        candidate.unseen_label_policy = config.unseen_label_policy;
        trained[c] = std::make_pair(std::move(candidate), std::move(batch));
      }
    }
    hidden = pick_hidden_size(report.hidden_search);
    if (!inner) {
      const auto pos = static_cast<std::size_t>(
          std::find(config.hidden_candidates.begin(), config.hidden_candidates.end(), *hidden) -
          config.hidden_candidates.begin());
      final_model = std::move(trained[pos]->first);
      final_batch = std::move(trained[pos]->second);
    }
  }

  if (!final_model) {
    const std::size_t h = hidden.value_or(1);
    final_batch = train_leaves(train, structure, config, h);
    final_model = assemble(train, structure, std::move(final_batch.leaves),
                           config, config.classifier == ClassifierKind::Mlp ? std::optional(h) : std::nullopt);
  }

  report.hidden_size = final_model->hidden_size;
  report.leaves = final_batch.timings;
  report.leaf_wall_seconds = final_batch.wall_seconds;
  report.model_name = final_model->name();
  report.total_seconds = seconds_since(start);
  result.model = std::move(*final_model);
  return result;
}

// ---------------------------------------------------------------- evaluation

double aggregate_accuracy(std::span<const std::pair<std::size_t, double>> parts) {
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [n, acc] : parts) {
    if (!(acc >= 0.0 && acc <= 1.0)) throw Error(ErrorCode::InvalidArgument, "accuracy outside [0, 1]");
    weighted += static_cast<double>(n) * acc;
    total += n;
  }
  if (total == 0) throw Error(ErrorCode::ZeroTotal, "no examples to aggregate");
  return weighted / static_cast<double>(total);
}

EvaluationReport evaluate(const GkmncModel& model, const DataTable& validation) {
  if (validation.empty()) throw Error(ErrorCode::EmptyValidation, "validation table is empty");
  const auto truth = validation.targets();

  struct Tally {
    std::size_t n = 0;
    std::size_t correct = 0;
  };
  std::map<std::string, Tally> groups;
  std::map<std::pair<std::string, std::size_t>, Tally> leaves;
  for (const auto& [label, g] : model.groups) {
    groups[label];
    for (std::size_t c = 0; c < g.leaves.size(); ++c) leaves[{label, c}];
  }

  EvaluationReport report;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const auto f = forecast(model, validation[i]);
    const bool hit = f.label == truth[i];
    auto& g = groups[f.route.group];
    auto& l = leaves[{f.route.group, f.route.cluster}];
    ++g.n;
    ++l.n;
    g.correct += hit;
    l.correct += hit;
    report.unseen_routed += f.route.unseen_label;
    auto& cm = report.confusion;
    if (truth[i] == ClassLabel::Positive) (hit ? cm.true_positive : cm.false_negative) += 1;
    else (hit ? cm.true_negative : cm.false_positive) += 1;
  }

  const auto acc = [](const Tally& t) { return t.n ? static_cast<double>(t.correct) / static_cast<double>(t.n) : 0.0; };
  for (const auto& [label, t] : groups) report.per_group.push_back({label, 0, t.n, acc(t)});
  for (const auto& [key, t] : leaves) report.per_leaf.push_back({key.first, key.second, t.n, acc(t)});
  report.n = validation.size();
  report.overall_accuracy =
      static_cast<double>(report.confusion.true_positive + report.confusion.true_negative) / static_cast<double>(report.n);
  return report;
}

CrossValidationReport cross_validate(const DataTable& table, std::size_t folds, const PipelineConfig& config) {
  CrossValidationReport out;
  std::size_t correct = 0;
  std::size_t total = 0;
  for (auto& split : split_folds(table, folds, config.seed)) {
    auto trained = train_gkmnc(split.train, std::nullopt, config);
    FoldResult r;
    r.fold = split.fold_index;
    r.train_rows = split.train.size();
    r.model_name = trained.model.name();
    r.evaluation = evaluate(trained.model, split.validation);
    correct += r.evaluation.confusion.true_positive + r.evaluation.confusion.true_negative;
    total += r.evaluation.n;
    out.mean_accuracy += r.evaluation.overall_accuracy;
    out.folds.push_back(std::move(r));
  }
  out.mean_accuracy /= static_cast<double>(out.folds.size());
  out.pooled_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return out;
}

// ---------------------------------------------------------------- reports

std::string TrainReport::groups_csv() const {
  std::string out = "group,rows,k,dbi,chosen,note\n";
  for (const auto& g : groups) {
    const auto prefix = text::csv_escape(g.label) + "," + std::to_string(g.rows) + ",";
    out += prefix + "1,," + (g.chosen_k == 1 ? "yes" : "no") + "," + text::csv_escape(g.clustering_note) + "\n";
    for (const auto& [k, dbi] : g.dbi_curve)
      out += prefix + std::to_string(k) + "," + text::format_fixed(dbi, 6) + "," + (k == g.chosen_k ? "yes" : "no") +
             ",\n";
  }
  return out;
}

std::string TrainReport::leaves_csv() const {
  std::string out = "group,cluster,rows\n";
  for (const auto& l : leaves)
    out += text::csv_escape(l.group) + "," + std::to_string(l.cluster) + "," + std::to_string(l.rows) + "\n";
  return out;
}

std::string TrainReport::hidden_csv() const {
  std::string out = "hidden_size,accuracy\n";
  for (const auto& [h, acc] : hidden_search) out += std::to_string(h) + "," + text::format_fixed(acc, 6) + "\n";
  return out;
}

std::string EvaluationReport::to_csv() const {
  std::string out = "scope,group,cluster,n,accuracy\n";
  out += "overall,,," + std::to_string(n) + "," + text::format_fixed(overall_accuracy, 6) + "\n";
  for (const auto& g : per_group)
    out += "group," + text::csv_escape(g.group) + ",," + std::to_string(g.n) + "," + text::format_fixed(g.accuracy, 6) +
           "\n";
  for (const auto& l : per_leaf)
    out += "leaf," + text::csv_escape(l.group) + "," + std::to_string(l.cluster) + "," + std::to_string(l.n) + "," +
           text::format_fixed(l.accuracy, 6) + "\n";
  out += "confusion,tp,," + std::to_string(confusion.true_positive) + ",\n";
  out += "confusion,tn,," + std::to_string(confusion.true_negative) + ",\n";
  out += "confusion,fp,," + std::to_string(confusion.false_positive) + ",\n";
  out += "confusion,fn,," + std::to_string(confusion.false_negative) + ",\n";
  return out;
}

std::string CrossValidationReport::to_csv() const {
  std::string out = "fold,train_rows,validation_rows,model,accuracy\n";
  for (const auto& f : folds)
    out += std::to_string(f.fold) + "," + std::to_string(f.train_rows) + "," + std::to_string(f.evaluation.n) + "," +
           f.model_name + "," + text::format_fixed(f.evaluation.overall_accuracy, 6) + "\n";
  out += "mean,,,," + text::format_fixed(mean_accuracy, 6) + "\n";
  out += "pooled,,,," + text::format_fixed(pooled_accuracy, 6) + "\n";
  return out;
}

}  // namespace gkmnc
