#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gkmnc/dataset.hpp"
#include "gkmnc/gpc.hpp"
#include "gkmnc/infogain.hpp"
#include "gkmnc/kmeans.hpp"
#include "gkmnc/mlp.hpp"
#include "gkmnc/optim.hpp"

namespace gkmnc {

enum class ClassifierKind { Mlp, Gpc };
enum class GroupingMode { Auto, Fixed, Off };
enum class ClusteringMode { Auto, Fixed, Off };
enum class UnseenLabelPolicy { Error, RouteToLargestGroup };

struct PipelineConfig {
  ClassifierKind classifier = ClassifierKind::Mlp;

  GroupingMode grouping = GroupingMode::Auto;
  std::string grouping_attribute;  // name or 1-based number, for GroupingMode::Fixed
  double gain_ratio_threshold = 0.01;

  ClusteringMode clustering = ClusteringMode::Auto;
  std::size_t fixed_k = 2;                         // ClusteringMode::Fixed, every group
  std::map<std::string, std::size_t> group_k;      // ClusteringMode::Fixed, per-group override
  std::size_t k_max = 8;
  std::size_t kmeans_restarts = 10;
  std::size_t min_partition_rows = 50;

  std::optional<std::size_t> hidden_size;  // unset = search hidden_candidates
  std::vector<std::size_t> hidden_candidates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double holdout_fraction = 0.2;  // inner validation share when searching without validation rows

  bool gpc_optimize_hyperparams = false;
  KernelParams gpc_kernel{};
  std::size_t gpc_size_cap = 3000;

  CgConfig mlp_cg{500, 1e-5, 0};
  CgConfig gpc_cg{100, 1e-5, 0};
  LineSearchConfig line_search{};

  std::uint64_t seed = 1;
  std::size_t worker_count = 1;
  UnseenLabelPolicy unseen_label_policy = UnseenLabelPolicy::RouteToLargestGroup;

  // Plain `key = value` lines using the field names above. Lists are comma
  // separated; group_k is `label:k,label:k`.
  static PipelineConfig parse(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);
  void set(std::string_view key, std::string_view value);
  std::string to_text() const;
  void validate() const;
};

std::string_view to_string(ClassifierKind kind);

using Classifier = std::variant<MlpModel, GpcModel>;

struct LeafNode {
  Classifier classifier;
  std::size_t training_rows = 0;
};

struct GroupNode {
  std::string label;
  NormalizationParams normalizer;        // fitted on the group's training rows
  std::optional<ClusterModel> clusters;  // absent = one leaf
  std::vector<LeafNode> leaves;
  std::size_t training_rows = 0;
};

// Label used for the single group when grouping is off.
inline constexpr std::string_view kAllRowsGroup = "*";

struct GkmncModel {
  Schema schema;
  ClassifierKind classifier = ClassifierKind::Mlp;
  std::optional<std::size_t> grouping_column;
  std::map<std::string, GroupNode> groups;
  UnseenLabelPolicy unseen_label_policy = UnseenLabelPolicy::RouteToLargestGroup;
  std::optional<std::size_t> hidden_size;

  // e.g. "G1-[7,8,5,5]-GPC"; groups listed in label order.
  std::string name() const;
  std::size_t leaf_count() const;
  const std::string& largest_group() const;
};

struct Route {
  std::string group;
  std::size_t cluster = 0;
  bool unseen_label = false;
};

struct Forecast {
  ClassLabel label = ClassLabel::Negative;
  std::optional<double> probability;  // GPC leaves only
  Route route;
};

struct LeafPrediction {
  ClassLabel label = ClassLabel::Negative;
  std::optional<double> probability;
};

LeafPrediction classify(const Classifier& classifier, const Eigen::VectorXd& raw_x);
Route route(const GkmncModel& model, const Record& example);
Forecast forecast(const GkmncModel& model, const Record& example);

struct GroupTrainInfo {
  std::string label;
  std::size_t rows = 0;
  std::vector<std::pair<std::size_t, double>> dbi_curve;
  std::size_t chosen_k = 1;
  std::string clustering_note;  // why clustering was skipped, if it was
};

struct LeafTrainInfo {
  std::string group;
  std::size_t cluster = 0;
  std::size_t rows = 0;
  double seconds = 0.0;
};

struct TrainReport {
  std::string model_name;
  std::optional<GainRatioReport> gain_ratios;
  std::optional<std::size_t> grouping_column;
  std::vector<GroupTrainInfo> groups;
  std::vector<std::pair<std::size_t, double>> hidden_search;  // (size, accuracy)
  std::optional<std::size_t> hidden_size;
  std::vector<LeafTrainInfo> leaves;
  double structure_seconds = 0.0;
  double leaf_wall_seconds = 0.0;  // wall clock of the final leaf-training phase
  double total_seconds = 0.0;

  std::string groups_csv() const;  // group,rows,k,dbi,chosen,note
  std::string leaves_csv() const;  // group,cluster,rows (timings stay in `leaves`)
  std::string hidden_csv() const;  // hidden_size,accuracy
};

struct TrainResult {
  GkmncModel model;
  TrainReport report;
};

TrainResult train_gkmnc(const DataTable& train, const std::optional<DataTable>& validation,
                        const PipelineConfig& config);

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  std::size_t total() const { return true_positive + true_negative + false_positive + false_negative; }
};

struct PartAccuracy {
  std::string group;
  std::size_t cluster = 0;  // unused for per-group rows
  std::size_t n = 0;
  double accuracy = 0.0;  // 0 when n = 0
};

struct EvaluationReport {
  std::size_t n = 0;
  double overall_accuracy = 0.0;
  std::vector<PartAccuracy> per_group;
  std::vector<PartAccuracy> per_leaf;
  ConfusionCounts confusion;
  std::size_t unseen_routed = 0;

  std::string to_csv() const;  // scope,group,cluster,n,accuracy
};

EvaluationReport evaluate(const GkmncModel& model, const DataTable& validation);

// Sum(n_i acc_i) / Sum(n_i)
double aggregate_accuracy(std::span<const std::pair<std::size_t, double>> parts);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_rows = 0;
  std::string model_name;
  EvaluationReport evaluation;
};

struct CrossValidationReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;    // mean of fold accuracies
  double pooled_accuracy = 0.0;  // all validation predictions together

  std::string to_csv() const;  // fold,train_rows,validation_rows,model,accuracy + mean rows
};

CrossValidationReport cross_validate(const DataTable& table, std::size_t folds, const PipelineConfig& config);

inline constexpr int kModelFormatVersion = 1;

void save_model(const GkmncModel& model, const std::filesystem::path& path);
GkmncModel load_model(const std::filesystem::path& path);
std::string serialize_model(const GkmncModel& model);
GkmncModel deserialize_model(std::string_view content);

}  // namespace gkmnc
