#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gkmnc/error.hpp"
#include "gkmnc/gpc.hpp"
#include "gkmnc/infogain.hpp"
#include "gkmnc/kmeans.hpp"
#include "gkmnc/pipeline.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace gkmnc;

namespace {

py::dict evaluation_dict(const EvaluationReport& r) {
  py::list groups, leaves;
  for (const auto& g : r.per_group) groups.append(py::dict("group"_a = g.group, "n"_a = g.n, "accuracy"_a = g.accuracy));
  for (const auto& l : r.per_leaf)
    leaves.append(py::dict("group"_a = l.group, "cluster"_a = l.cluster, "n"_a = l.n, "accuracy"_a = l.accuracy));
  const auto& c = r.confusion;
  return py::dict("n"_a = r.n, "accuracy"_a = r.overall_accuracy, "per_group"_a = groups, "per_leaf"_a = leaves,
                  "confusion"_a = py::dict("tp"_a = c.true_positive, "tn"_a = c.true_negative,
                                           "fp"_a = c.false_positive, "fn"_a = c.false_negative),
                  "unseen_routed"_a = r.unseen_routed);
}

py::list gain_ratio_list(const GainRatioReport& report) {
  py::list out;
  for (const auto& e : report.entries)
    out.append(py::dict("attribute"_a = e.column + 1, "name"_a = e.name, "info_gain"_a = e.value.info_gain,
                        "split_info"_a = e.value.split_info, "gain_ratio"_a = e.value.ratio, "rank"_a = e.rank,
                        "excluded"_a = e.excluded));
  return out;
}

}  // namespace

PYBIND11_MODULE(_gkmnc, m) {
  m.doc() = "Grouped, clustered nonlinear classifiers";

  // Raised for every library error; `code` holds the error name.
  static py::handle error_type = py::exception<Error>(m, "GkmncError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<Schema>(m, "Schema")
      .def_static("load", &Schema::load, "path"_a)
      .def_static("parse", &Schema::parse, "text"_a)
      .def("to_text", &Schema::to_text)
      .def_property_readonly("names", [](const Schema& s) {
        std::vector<std::string> out;
        for (const auto& a : s.attributes()) out.push_back(a.name);
        return out;
      });

  py::class_<DataTable>(m, "Table")
      .def("__len__", &DataTable::size)
      .def_property_readonly("schema", &DataTable::schema)
      .def("numeric_matrix", &DataTable::numeric_matrix)
      .def("targets", [](const DataTable& t) {
        std::vector<int> out;
        for (auto c : t.targets()) out.push_back(static_cast<int>(c));
        return out;
      });

  m.def("load_table", [](const std::filesystem::path& path, const Schema& schema, bool require_target) {
    return load_table(path, schema, require_target ? TargetRequirement::Required : TargetRequirement::Optional);
  }, "path"_a, "schema"_a, "require_target"_a = true);
  m.def("read_table", [](const std::string& csv, const Schema& schema) {
    std::istringstream in(csv);
    return read_table(in, schema);
  }, "csv"_a, "schema"_a);

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init([](const py::kwargs& kw) {
        PipelineConfig c;
        for (const auto& [k, v] : kw) c.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
        return c;
      }))
      .def_static("parse", &PipelineConfig::parse, "text"_a)
      .def_static("load", &PipelineConfig::load, "path"_a)
      .def("set", [](PipelineConfig& c, const std::string& k, const py::object& v) {
        c.set(k, py::str(v).cast<std::string>());
      }, "key"_a, "value"_a)
      .def("to_text", &PipelineConfig::to_text)
      .def("validate", &PipelineConfig::validate);

  py::class_<GkmncModel>(m, "Model")
      .def_property_readonly("name", &GkmncModel::name)
      .def_property_readonly("leaf_count", &GkmncModel::leaf_count)
      .def_property_readonly("hidden_size", [](const GkmncModel& g) { return g.hidden_size; })
      .def_property_readonly("grouping_attribute", [](const GkmncModel& g) -> std::optional<std::size_t> {
        if (!g.grouping_column) return std::nullopt;
        return *g.grouping_column + 1;
      })
      .def("predict", [](const GkmncModel& model, const DataTable& table) {
        py::list out;
        for (const auto& r : table.rows()) {
          const auto f = forecast(model, r);
          out.append(py::dict("label"_a = static_cast<int>(f.label), "probability"_a = f.probability,
                              "group"_a = f.route.group, "cluster"_a = f.route.cluster,
                              "unseen_label"_a = f.route.unseen_label));
        }
        return out;
      }, "table"_a)
      .def("evaluate", [](const GkmncModel& model, const DataTable& t) { return evaluation_dict(evaluate(model, t)); },
           "table"_a)
      .def("save", [](const GkmncModel& model, const std::filesystem::path& p) { save_model(model, p); }, "path"_a)
      .def("dumps", &serialize_model)
      .def_static("load", &load_model, "path"_a)
      .def_static("loads", [](const std::string& s) { return deserialize_model(s); }, "text"_a);

  m.def("train", [](const DataTable& train, const PipelineConfig& config, const std::optional<DataTable>& validation) {
    py::gil_scoped_release release;
    return train_gkmnc(train, validation, config);
  }, "table"_a, "config"_a = PipelineConfig{}, "validation"_a = std::nullopt);

  py::class_<TrainResult>(m, "TrainResult")
      .def_property_readonly("model", [](const TrainResult& r) { return r.model; })
      .def_property_readonly("groups_csv", [](const TrainResult& r) { return r.report.groups_csv(); })
      .def_property_readonly("hidden_search", [](const TrainResult& r) { return r.report.hidden_search; })
      .def_property_readonly("gain_ratios", [](const TrainResult& r) -> py::object {
        if (!r.report.gain_ratios) return py::none();
        return gain_ratio_list(*r.report.gain_ratios);
      });

  m.def("cross_validate", [](const DataTable& t, std::size_t folds, const PipelineConfig& c) {
    CrossValidationReport r;
    {
      py::gil_scoped_release release;
      r = cross_validate(t, folds, c);
    }
    py::list per_fold;
    for (const auto& f : r.folds)
      per_fold.append(py::dict("fold"_a = f.fold, "model"_a = f.model_name, "accuracy"_a = f.evaluation.overall_accuracy));
    return py::dict("mean_accuracy"_a = r.mean_accuracy, "pooled_accuracy"_a = r.pooled_accuracy,
                    "folds"_a = per_fold, "csv"_a = r.to_csv());
  }, "table"_a, "folds"_a = 10, "config"_a = PipelineConfig{});

  m.def("gain_ratios", [](const DataTable& t, double threshold) {
    const auto sel = select_grouping_attribute(t, threshold);
    std::optional<std::size_t> chosen;
    if (sel.column) chosen = *sel.column + 1;
    return py::make_tuple(chosen, gain_ratio_list(sel.report));
  }, "table"_a, "threshold"_a = 0.01);

  m.def("entropy", [](const std::vector<std::size_t>& counts) { return entropy(counts); }, "counts"_a);
  m.def("aggregate_accuracy",
        [](const std::vector<std::pair<std::size_t, double>>& parts) { return aggregate_accuracy(parts); }, "parts"_a);

  m.def("kmeans", [](const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed) {
    const auto c = kmeans_fit(rows, k, seed);
    return py::dict("centroids"_a = c.centroids, "assignments"_a = c.assignments, "sse"_a = c.within_cluster_sse,
                    "dbi"_a = c.dbi);
  }, "rows"_a, "k"_a, "seed"_a = 0);
  m.def("select_k", [](const Eigen::MatrixXd& rows, std::size_t k_max, std::uint64_t seed) {
    const auto s = select_k(rows, k_max, seed);
    return py::make_tuple(s.chosen.k, s.dbi_curve);
  }, "rows"_a, "k_max"_a = 8, "seed"_a = 0);
  m.def("davies_bouldin", [](const Eigen::MatrixXd& rows, const std::vector<std::size_t>& assignments,
                             const Eigen::MatrixXd& centroids) {
    ClusterModel c;
    c.k = static_cast<std::size_t>(centroids.rows());
    c.centroids = centroids;
    c.assignments = assignments;
    return davies_bouldin(rows, c);
  }, "rows"_a, "assignments"_a, "centroids"_a);

  m.def("laplace_mode", [](const Eigen::MatrixXd& kernel, const Eigen::VectorXd& targets) {
    const auto r = laplace_mode(kernel, targets);
    return py::dict("mode"_a = r.mode, "alpha"_a = r.alpha, "log_marginal"_a = r.log_marginal,
                    "psi_trace"_a = r.psi_trace, "iterations"_a = r.iterations);
  }, "kernel"_a, "targets"_a);
  m.def("expected_logistic", &expected_logistic, "mean"_a, "variance"_a);

  m.attr("MODEL_FORMAT_VERSION") = kModelFormatVersion;
}
