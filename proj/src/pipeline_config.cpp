#include <fstream>
#include <sstream>

#include "gkmnc/error.hpp"
#include "gkmnc/pipeline.hpp"
#include "text.hpp"

namespace gkmnc {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidArgument, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

std::size_t to_size(std::string_view key, std::string_view value) {
  const auto v = text::parse_int<std::size_t>(value);
  if (!v) bad_value(key, value);
  return *v;
}

double to_real(std::string_view key, std::string_view value) {
  const auto v = text::parse_double(value);
  if (!v) bad_value(key, value);
  return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    const auto piece = text::trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!piece.empty()) out.push_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

// "1,2,5" or "1-10"
std::vector<std::size_t> to_size_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  for (auto piece : split(value, ',')) {
    if (const auto dash = piece.find('-'); dash != std::string_view::npos && dash > 0) {
      const auto lo = to_size(key, piece.substr(0, dash));
      const auto hi = to_size(key, piece.substr(dash + 1));
      if (lo > hi) bad_value(key, value);
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(to_size(key, piece));
    }
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

std::string_view grouping_name(GroupingMode m) {
  switch (m) {
    case GroupingMode::Auto: return "auto";
    case GroupingMode::Fixed: return "fixed";
    case GroupingMode::Off: return "off";
  }
  return "auto";
}

std::string_view clustering_name(ClusteringMode m) {
  switch (m) {
    case ClusteringMode::Auto: return "auto";
    case ClusteringMode::Fixed: return "fixed";
    case ClusteringMode::Off: return "off";
  }
  return "auto";
}

}  // namespace

std::string_view to_string(ClassifierKind kind) { return kind == ClassifierKind::Mlp ? "MLP" : "GPC"; }

void PipelineConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const auto key = text::trim(raw_key);
  const auto value = text::trim(raw_value);
  if (key == "classifier") {
    if (value == "mlp" || value == "MLP") classifier = ClassifierKind::Mlp;
    else if (value == "gpc" || value == "GPC") classifier = ClassifierKind::Gpc;
    else bad_value(key, value);
  } else if (key == "grouping") {
    if (value == "auto") grouping = GroupingMode::Auto;
    else if (value == "fixed") grouping = GroupingMode::Fixed;
    else if (value == "off") grouping = GroupingMode::Off;
    else bad_value(key, value);
  } else if (key == "grouping_attribute") {
    grouping_attribute = std::string(value);
  } else if (key == "gain_ratio_threshold") {
    gain_ratio_threshold = to_real(key, value);
  } else if (key == "clustering") {
    if (value == "auto") clustering = ClusteringMode::Auto;
    else if (value == "fixed") clustering = ClusteringMode::Fixed;
    else if (value == "off") clustering = ClusteringMode::Off;
    else bad_value(key, value);
  } else if (key == "fixed_k") {
    fixed_k = to_size(key, value);
  } else if (key == "group_k") {
    group_k.clear();
    for (auto piece : split(value, ',')) {
      const auto colon = piece.rfind(':');
      if (colon == std::string_view::npos) bad_value(key, value);
      group_k[std::string(text::trim(piece.substr(0, colon)))] = to_size(key, piece.substr(colon + 1));
    }
  } else if (key == "k_max") {
    k_max = to_size(key, value);
  } else if (key == "kmeans_restarts") {
    kmeans_restarts = to_size(key, value);
  } else if (key == "min_partition_rows") {
    min_partition_rows = to_size(key, value);
  } else if (key == "hidden_size") {
    if (value == "search") hidden_size.reset();
    else hidden_size = to_size(key, value);
  } else if (key == "hidden_candidates") {
    hidden_candidates = to_size_list(key, value);
  } else if (key == "holdout_fraction") {
    holdout_fraction = to_real(key, value);
  } else if (key == "gpc_optimize_hyperparams") {
    gpc_optimize_hyperparams = to_bool(key, value);
  } else if (key == "gpc_signal_variance") {
    gpc_kernel.signal_variance = to_real(key, value);
  } else if (key == "gpc_length_scale") {
    gpc_kernel.length_scale = to_real(key, value);
  } else if (key == "gpc_jitter") {
    gpc_kernel.jitter = to_real(key, value);
  } else if (key == "gpc_size_cap") {
    gpc_size_cap = to_size(key, value);
  } else if (key == "mlp_max_iterations") {
    mlp_cg.max_iterations = to_size(key, value);
  } else if (key == "mlp_gradient_tolerance") {
    mlp_cg.gradient_norm_tolerance = to_real(key, value);
  } else if (key == "gpc_max_iterations") {
    gpc_cg.max_iterations = to_size(key, value);
  } else if (key == "gpc_gradient_tolerance") {
    gpc_cg.gradient_norm_tolerance = to_real(key, value);
  } else if (key == "line_search_step") {
    line_search.step = to_real(key, value);
  } else if (key == "line_search_tolerance") {
    line_search.tolerance = to_real(key, value);
  } else if (key == "seed") {
    seed = to_size(key, value);
  } else if (key == "worker_count" || key == "workers") {
    worker_count = to_size(key, value);
  } else if (key == "unseen_label_policy") {
    if (value == "error") unseen_label_policy = UnseenLabelPolicy::Error;
    else if (value == "route_to_largest_group") unseen_label_policy = UnseenLabelPolicy::RouteToLargestGroup;
    else bad_value(key, value);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
}

PipelineConfig PipelineConfig::parse(std::string_view content) {
  PipelineConfig config;
  std::istringstream in{std::string(content)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    config.set(view.substr(0, eq), view.substr(eq + 1));
  }
  config.validate();
  return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void PipelineConfig::validate() const {
  if (!(gain_ratio_threshold > 0.0))
    throw Error(ErrorCode::InvalidArgument, "gain_ratio_threshold must be positive");
  if (k_max < 2) throw Error(ErrorCode::InvalidArgument, "k_max must be at least 2");
  if (grouping == GroupingMode::Fixed && grouping_attribute.empty())
    throw Error(ErrorCode::InvalidArgument, "grouping = fixed needs grouping_attribute");
  if (hidden_size && *hidden_size == 0) throw Error(ErrorCode::InvalidArgument, "hidden_size must be positive");
  if (hidden_candidates.empty()) throw Error(ErrorCode::InvalidArgument, "hidden_candidates is empty");
  for (auto h : hidden_candidates)
    if (h == 0) throw Error(ErrorCode::InvalidArgument, "hidden_candidates must be positive");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "holdout_fraction must lie in (0, 1)");
  if (!(line_search.step > 0.0) || !(line_search.tolerance > 0.0))
    throw Error(ErrorCode::InvalidArgument, "line search step and tolerance must be positive");
  if (!(gpc_kernel.signal_variance > 0.0) || !(gpc_kernel.length_scale > 0.0) || gpc_kernel.jitter < 0.0)
    throw Error(ErrorCode::InvalidArgument, "GPC kernel parameters must be positive");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  out << "classifier = " << (classifier == ClassifierKind::Mlp ? "mlp" : "gpc") << "\n";
  out << "grouping = " << grouping_name(grouping) << "\n";
  if (!grouping_attribute.empty()) out << "grouping_attribute = " << grouping_attribute << "\n";
  out << "gain_ratio_threshold = " << text::format_double(gain_ratio_threshold) << "\n";
  out << "clustering = " << clustering_name(clustering) << "\n";
  out << "fixed_k = " << fixed_k << "\n";
  if (!group_k.empty()) {
    out << "group_k = ";
    bool first = true;
    for (const auto& [label, k] : group_k) {
      out << (first ? "" : ",") << label << ":" << k;
      first = false;
    }
    out << "\n";
  }
  out << "k_max = " << k_max << "\n";
  out << "kmeans_restarts = " << kmeans_restarts << "\n";
  out << "min_partition_rows = " << min_partition_rows << "\n";
  out << "hidden_size = " << (hidden_size ? std::to_string(*hidden_size) : std::string("search")) << "\n";
  out << "hidden_candidates = ";
  for (std::size_t i = 0; i < hidden_candidates.size(); ++i) out << (i ? "," : "") << hidden_candidates[i];
  out << "\n";
  out << "holdout_fraction = " << text::format_double(holdout_fraction) << "\n";
  out << "gpc_optimize_hyperparams = " << (gpc_optimize_hyperparams ? "true" : "false") << "\n";
  out << "gpc_signal_variance = " << text::format_double(gpc_kernel.signal_variance) << "\n";
  out << "gpc_length_scale = " << text::format_double(gpc_kernel.length_scale) << "\n";
  out << "gpc_jitter = " << text::format_double(gpc_kernel.jitter) << "\n";
  out << "gpc_size_cap = " << gpc_size_cap << "\n";
  out << "mlp_max_iterations = " << mlp_cg.max_iterations << "\n";
  out << "mlp_gradient_tolerance = " << text::format_double(mlp_cg.gradient_norm_tolerance) << "\n";
  out << "gpc_max_iterations = " << gpc_cg.max_iterations << "\n";
  out << "gpc_gradient_tolerance = " << text::format_double(gpc_cg.gradient_norm_tolerance) << "\n";
  out << "line_search_step = " << text::format_double(line_search.step) << "\n";
  out << "line_search_tolerance = " << text::format_double(line_search.tolerance) << "\n";
  out << "seed = " << seed << "\n";
  out << "worker_count = " << worker_count << "\n";
  out << "unseen_label_policy = "
      << (unseen_label_policy == UnseenLabelPolicy::Error ? "error" : "route_to_largest_group") << "\n";
  return out.str();
}

}  // namespace gkmnc
