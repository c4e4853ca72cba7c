#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gkmnc/error.hpp"
#include "gkmnc/pipeline.hpp"

namespace gkmnc {

namespace {

using json = nlohmann::json;

constexpr const char* kFormatTag = "gkmnc-model";

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd row = m.row(i).transpose();
    rows.push_back(to_json(row));
  }
  return rows;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto row = vector_from(j.at(static_cast<std::size_t>(i)));
    if (row.size() != cols) throw Error(ErrorCode::CorruptFile, "ragged matrix in model file");
    m.row(i) = row.transpose();
  }
  return m;
}

json to_json(const NormalizationParams& p) { return {{"mean", to_json(p.mean)}, {"stddev", to_json(p.stddev)}}; }

NormalizationParams normalizer_from(const json& j) {
  NormalizationParams p{vector_from(j.at("mean")), vector_from(j.at("stddev"))};
  if (p.mean.size() != p.stddev.size()) throw Error(ErrorCode::CorruptFile, "normalizer arrays differ in length");
  return p;
}

json constant_json(const std::optional<ClassLabel>& c) {
  if (!c) return nullptr;
  return static_cast<int>(*c);
}

std::optional<ClassLabel> constant_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>() > 0 ? ClassLabel::Positive : ClassLabel::Negative;
}

json to_json(const Classifier& classifier) {
  if (const auto* m = std::get_if<MlpModel>(&classifier)) {
    return {{"kind", "mlp"},
            {"architecture", m->architecture()},
            {"input_size", m->input_size},
            {"hidden_size", m->hidden_size},
            {"seed", m->seed},
            {"constant", constant_json(m->constant)},
            {"normalizer", to_json(m->normalizer)},
            {"parameters", to_json(m->parameters())}};
  }
  const auto& g = std::get<GpcModel>(classifier);
  return {{"kind", "gpc"},
          {"seed", g.seed},
          {"constant", constant_json(g.constant)},
          {"normalizer", to_json(g.normalizer)},
          {"kernel",
           {{"signal_variance", g.kernel.signal_variance},
            {"length_scale", g.kernel.length_scale},
            {"jitter", g.kernel.jitter}}},
          {"log_marginal", g.log_marginal},
          {"inputs", to_json(g.inputs)},
          {"targets", to_json(g.targets)},
          {"mode", to_json(g.mode)},
          {"alpha", to_json(g.alpha)}};
}

Classifier classifier_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "mlp") {
    MlpModel m;
    m.input_size = j.at("input_size").get<std::size_t>();
    m.hidden_size = j.at("hidden_size").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.constant = constant_from(j.at("constant"));
    m.normalizer = normalizer_from(j.at("normalizer"));
    m.set_parameters(vector_from(j.at("parameters")));
    return m;
  }
  if (kind == "gpc") {
    GpcModel g;
    g.seed = j.at("seed").get<std::uint64_t>();
    g.constant = constant_from(j.at("constant"));
    g.normalizer = normalizer_from(j.at("normalizer"));
    const auto& k = j.at("kernel");
    g.kernel = {k.at("signal_variance").get<double>(), k.at("length_scale").get<double>(),
                k.at("jitter").get<double>()};
    g.log_marginal = j.at("log_marginal").get<double>();
    g.inputs = matrix_from(j.at("inputs"), static_cast<Eigen::Index>(g.normalizer.size()));
    g.targets = vector_from(j.at("targets"));
    g.mode = vector_from(j.at("mode"));
    g.alpha = vector_from(j.at("alpha"));
    if (g.targets.size() != g.inputs.rows() || g.mode.size() != g.inputs.rows() || g.alpha.size() != g.inputs.rows())
      throw Error(ErrorCode::CorruptFile, "GPC arrays disagree in length");
    g.rebuild_cache();
    return g;
  }
  throw Error(ErrorCode::CorruptFile, "unknown classifier kind '" + kind + "'");
}

json to_json(const ClusterModel& c) {
  json out = {{"k", c.k}, {"centroids", to_json(c.centroids)}, {"within_cluster_sse", c.within_cluster_sse}};
  out["dbi"] = c.dbi ? json(*c.dbi) : json(nullptr);
  return out;
}

ClusterModel cluster_from(const json& j, Eigen::Index dims) {
  ClusterModel c;
  c.k = j.at("k").get<std::size_t>();
  c.centroids = matrix_from(j.at("centroids"), dims);
  c.within_cluster_sse = j.at("within_cluster_sse").get<double>();
  if (!j.at("dbi").is_null()) c.dbi = j.at("dbi").get<double>();
  if (static_cast<std::size_t>(c.centroids.rows()) != c.k) throw Error(ErrorCode::CorruptFile, "centroid count != k");
  return c;
}

}  // namespace

std::string serialize_model(const GkmncModel& model) {
  json groups = json::array();
  for (const auto& [label, g] : model.groups) {
    json leaves = json::array();
    for (const auto& leaf : g.leaves)
      leaves.push_back({{"training_rows", leaf.training_rows}, {"classifier", to_json(leaf.classifier)}});
    groups.push_back({{"label", label},
                      {"training_rows", g.training_rows},
                      {"normalizer", to_json(g.normalizer)},
                      {"clusters", g.clusters ? to_json(*g.clusters) : json(nullptr)},
                      {"leaves", std::move(leaves)}});
  }
  json doc = {
      {"format", kFormatTag},
      {"version", kModelFormatVersion},
      {"name", model.name()},
      {"classifier", model.classifier == ClassifierKind::Mlp ? "mlp" : "gpc"},
      {"grouping_attribute", model.grouping_column ? json(*model.grouping_column + 1) : json(nullptr)},
      {"hidden_size", model.hidden_size ? json(*model.hidden_size) : json(nullptr)},
      {"unseen_label_policy",
       model.unseen_label_policy == UnseenLabelPolicy::Error ? "error" : "route_to_largest_group"},
      {"schema", model.schema.to_text()},
      {"groups", std::move(groups)},
  };
  return doc.dump(1) + "\n";
}

GkmncModel deserialize_model(std::string_view content) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("model file is not valid: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormatTag)
      throw Error(ErrorCode::CorruptFile, "not a gkmnc model file");
    const auto version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error(ErrorCode::FormatVersionMismatch, "model format version " + std::to_string(version) +
                                                        ", expected " + std::to_string(kModelFormatVersion));
    GkmncModel model;
    model.schema = Schema::parse(doc.at("schema").get<std::string>());
    model.classifier = doc.at("classifier").get<std::string>() == "gpc" ? ClassifierKind::Gpc : ClassifierKind::Mlp;
    if (!doc.at("grouping_attribute").is_null())
      model.grouping_column = doc.at("grouping_attribute").get<std::size_t>() - 1;
    if (!doc.at("hidden_size").is_null()) model.hidden_size = doc.at("hidden_size").get<std::size_t>();
    model.unseen_label_policy = doc.at("unseen_label_policy").get<std::string>() == "error"
                                    ? UnseenLabelPolicy::Error
                                    : UnseenLabelPolicy::RouteToLargestGroup;
    const auto dims = static_cast<Eigen::Index>(model.schema.numeric_columns().size());
    for (const auto& gj : doc.at("groups")) {
      GroupNode g;
      g.label = gj.at("label").get<std::string>();
      g.training_rows = gj.at("training_rows").get<std::size_t>();
      g.normalizer = normalizer_from(gj.at("normalizer"));
      if (!gj.at("clusters").is_null()) g.clusters = cluster_from(gj.at("clusters"), dims);
      for (const auto& lj : gj.at("leaves"))
        g.leaves.push_back({classifier_from(lj.at("classifier")), lj.at("training_rows").get<std::size_t>()});
      const std::size_t expected = g.clusters ? g.clusters->k : 1;
      if (g.leaves.size() != expected) throw Error(ErrorCode::CorruptFile, "group '" + g.label + "' leaf count");
      model.groups.emplace(g.label, std::move(g));
    }
    if (model.groups.empty()) throw Error(ErrorCode::CorruptFile, "model has no groups");
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("model file is incomplete: ") + e.what());
  }
}

void save_model(const GkmncModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write model file " + path.string());
  out << serialize_model(model);
  if (!out) throw Error(ErrorCode::Io, "failed writing model file " + path.string());
}

GkmncModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open model file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace gkmnc
