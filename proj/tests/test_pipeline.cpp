#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gkmnc/error.hpp"
#include "gkmnc/pipeline.hpp"
#include "gkmnc/seed.hpp"
#include "support.hpp"

using namespace gkmnc;

namespace {

// Two regions, each holding two blobs on the x = y diagonal; the label
// threshold on z differs by region.
DataTable quad_blobs(std::size_t per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::ostringstream csv;
  csv << "region,x,y,z,label\n";
  for (int b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < per_blob; ++i) {
      const double x = (b % 2) * 8.0 + g(rng), y = (b % 2) * 8.0 + g(rng), z = g(rng);
      const bool pos = (b < 2) ? z > -0.6 : z > 0.6;
      csv << (b < 2 ? "north" : "south") << ',' << x << ',' << y << ',' << z << ',' << (pos ? "yes" : "no") << '\n';
    }
  return test::from_csv("region = nominal\nx = numeric\ny = numeric\nz = numeric\nlabel = target\npositive_label = yes\n",
                        csv.str());
}

PipelineConfig small_config(ClassifierKind kind) {
  PipelineConfig c;
  c.classifier = kind;
  c.hidden_size = 3;
  c.min_partition_rows = 20;
  c.k_max = 4;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("weighted aggregation") {
  const std::pair<std::size_t, double> parts[] = {{26, 0.6923}, {43, 0.9070}, {27, 0.6296}, {4, 0.50}};
  CHECK(std::abs(aggregate_accuracy(parts) - 0.76) < 5e-3);
  const std::pair<std::size_t, double> one[] = {{7, 0.3}};
  CHECK(aggregate_accuracy(one) == doctest::Approx(0.3));
  const std::pair<std::size_t, double> even[] = {{5, 0.0}, {5, 1.0}};
  CHECK(aggregate_accuracy(even) == 0.5);
  const std::pair<std::size_t, double> none[] = {{0, 0.5}};
  CHECK(code_of([&] { aggregate_accuracy(none); }) == ErrorCode::ZeroTotal);
}

TEST_CASE("config text round trip and validation") {
  auto c = PipelineConfig::parse("classifier = gpc\ngrouping = fixed\ngrouping_attribute = 1\ngroup_k = a:2,b:3\n");
  CHECK(c.classifier == ClassifierKind::Gpc);
  CHECK(c.group_k.at("b") == 3);
  const auto again = PipelineConfig::parse(c.to_text());
  CHECK(again.to_text() == c.to_text());
  CHECK(code_of([&] { c.set("no_such_key", "1"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { c.set("k_max", "1"); c.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("model structure, routing totality and evaluation invariants") {
  const auto train = quad_blobs(60, 1);
  const auto valid = quad_blobs(25, 2);
  const auto result = train_gkmnc(train, std::nullopt, small_config(ClassifierKind::Mlp));
  const auto& m = result.model;
  REQUIRE(m.grouping_column.has_value());
  CHECK(*m.grouping_column == 0);
  CHECK(m.groups.size() == 2);
  CHECK(m.name() == result.report.model_name);
  CHECK(m.name().rfind("G1-[", 0) == 0);

  const auto ev = evaluate(m, valid);
  std::size_t leaf_total = 0;
  for (const auto& l : ev.per_leaf) leaf_total += l.n;
  CHECK(leaf_total == valid.size());
  CHECK(ev.confusion.total() == valid.size());

  std::vector<std::pair<std::size_t, double>> parts;
  for (const auto& g : ev.per_group) parts.emplace_back(g.n, g.accuracy);
  CHECK(std::abs(aggregate_accuracy(parts) - ev.overall_accuracy) < 1e-12);
  CHECK(ev.overall_accuracy > 0.8);
}

TEST_CASE("identical results for one and four workers") {
  const auto train = quad_blobs(50, 3);
  const auto valid = quad_blobs(20, 4);
  for (auto kind : {ClassifierKind::Mlp, ClassifierKind::Gpc}) {
    auto c1 = small_config(kind);
    auto c4 = c1;
    c4.worker_count = 4;
    const auto a = train_gkmnc(train, std::nullopt, c1);
    const auto b = train_gkmnc(train, std::nullopt, c4);
    CHECK(serialize_model(a.model) == serialize_model(b.model));
    CHECK(evaluate(a.model, valid).to_csv() == evaluate(b.model, valid).to_csv());
    CHECK(cross_validate(train, 3, c1).to_csv() == cross_validate(train, 3, c4).to_csv());
  }
}

TEST_CASE("grouping and clustering off equals the universal classifier") {
  const auto train = quad_blobs(40, 5);
  const auto valid = quad_blobs(20, 6);
  auto c = small_config(ClassifierKind::Mlp);
  c.grouping = GroupingMode::Off;
  c.clustering = ClusteringMode::Off;
  const auto pipe = train_gkmnc(train, std::nullopt, c).model;
  CHECK(pipe.name() == "MLP");
  CHECK(*pipe.hidden_size == 3);

  const auto seed = derive_seed(c.seed, kAllRowsGroup, 0);
  const auto direct = mlp_train(train.numeric_matrix(), train.targets(), {3, seed, c.mlp_cg, c.line_search}).model;
  std::size_t hits = 0;
  const auto truth = valid.targets();
  for (std::size_t i = 0; i < valid.size(); ++i) hits += mlp_classify(direct, valid[i].numeric_vector()) == truth[i];
  CHECK(evaluate(pipe, valid).overall_accuracy == static_cast<double>(hits) / static_cast<double>(valid.size()));

  c.classifier = ClassifierKind::Gpc;
  const auto gpipe = train_gkmnc(train, std::nullopt, c).model;
  GpcTrainOptions go;
  go.seed = seed;
  const auto gdirect = gpc_train(train.numeric_matrix(), train.targets(), go).model;
  for (std::size_t i = 0; i < valid.size(); ++i)
    CHECK(forecast(gpipe, valid[i]).probability.value() == gpc_predict_prob(gdirect, valid[i].numeric_vector()));
}

TEST_CASE("unseen nominal labels") {
  const auto train = quad_blobs(30, 7);
  auto c = small_config(ClassifierKind::Mlp);
  c.clustering = ClusteringMode::Off;
  auto model = train_gkmnc(train, std::nullopt, c).model;
  Record r = train[0];
  r.nominal[0] = "east";
  const auto f = forecast(model, r);
  CHECK(f.route.unseen_label);
  CHECK(f.route.group == model.largest_group());
  model.unseen_label_policy = UnseenLabelPolicy::Error;
  CHECK(code_of([&] { forecast(model, r); }) == ErrorCode::UnseenNominalLabel);
}

TEST_CASE("model files round trip and reject damage") {
  const auto train = quad_blobs(40, 8);
  const auto valid = quad_blobs(15, 9);
  test::TempDir dir("model");
  for (auto kind : {ClassifierKind::Mlp, ClassifierKind::Gpc}) {
    const auto model = train_gkmnc(train, std::nullopt, small_config(kind)).model;
    const auto path = dir.path / "m.json";
    save_model(model, path);
    const auto back = load_model(path);
    CHECK(back.name() == model.name());
    for (std::size_t i = 0; i < valid.size(); ++i) {
      const auto a = forecast(model, valid[i]), b = forecast(back, valid[i]);
      CHECK(a.label == b.label);
      CHECK(a.route.group == b.route.group);
      CHECK(a.route.cluster == b.route.cluster);
      if (a.probability) CHECK(std::abs(*a.probability - *b.probability) < 1e-12);
    }
    const auto text = serialize_model(model);
    CHECK(serialize_model(deserialize_model(text)) == text);
    CHECK(code_of([&] { deserialize_model(text.substr(0, text.size() / 2)); }) == ErrorCode::CorruptFile);

    auto bumped = text;
    const auto pos = bumped.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 12, "\"version\": 99");
    CHECK(code_of([&] { deserialize_model(bumped); }) == ErrorCode::FormatVersionMismatch);
  }
  CHECK(code_of([&] { load_model(dir.path / "missing.json"); }) == ErrorCode::Io);
}

TEST_CASE("cross validation report") {
  const auto table = quad_blobs(30, 10);
  auto c = small_config(ClassifierKind::Mlp);
  c.clustering = ClusteringMode::Off;
  const auto r = cross_validate(table, 4, c);
  CHECK(r.folds.size() == 4);
  double mean = 0;
  std::size_t n = 0;
  for (const auto& f : r.folds) {
    mean += f.evaluation.overall_accuracy / 4.0;
    n += f.evaluation.n;
    CHECK(f.train_rows + f.evaluation.n == table.size());
  }
  CHECK(n == table.size());
  CHECK(r.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.to_csv() == cross_validate(table, 4, c).to_csv());
}
