#include <set>
#include <sstream>

#include "doctest.h"
#include "gkmnc/dataset.hpp"
#include "gkmnc/error.hpp"
#include "support.hpp"

using namespace gkmnc;

namespace {

const char* kSchema = "color = nominal\nid = identifier\nx = numeric\ny = numeric\nlabel = target\npositive_label = good\n";

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

TEST_CASE("schema parsing and lookups") {
  const auto s = Schema::parse(kSchema);
  CHECK(s.size() == 5);
  CHECK(s.target_column() == 4);
  CHECK(s.nominal_columns() == std::vector<std::size_t>{0});
  CHECK(s.numeric_columns() == std::vector<std::size_t>{2, 3});
  CHECK(s.resolve("1") == 0);
  CHECK(s.resolve("y") == 3);
  CHECK(code_of([&] { s.resolve("nope"); }) == ErrorCode::InvalidArgument);
  CHECK(Schema::parse(s.to_text()) == s);
  CHECK(code_of([] { Schema::parse("a = numeric\npositive_label = x\n"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("csv loading keeps columns by name and flags bad cells") {
  const auto t = test::from_csv(kSchema, "label,y,x,id,color\ngood,2,1,a,red\nbad,4,3,b,\n");
  REQUIRE(t.size() == 2);
  CHECK(t[0].numeric == std::vector<double>{1, 2});
  CHECK(t[1].nominal[0] == "?");
  CHECK(t.targets() == std::vector<ClassLabel>{ClassLabel::Positive, ClassLabel::Negative});

  CHECK(code_of([] { test::from_csv(kSchema, "color,id,x,label\nred,a,1,good\n"); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { test::from_csv(kSchema, "color,id,x,y,label\nred,a,one,2,good\n"); }) == ErrorCode::TypeMismatch);
  CHECK(code_of([] { test::from_csv(kSchema, "color,id,x,y,label\nred,a,1,2,?\n"); }) ==
        ErrorCode::UnknownTargetLabel);

  std::istringstream unlabelled("color,id,x,y\nred,a,1,2\n");
  const auto u = read_table(unlabelled, Schema::parse(kSchema), TargetRequirement::Optional);
  CHECK_FALSE(u[0].target.has_value());
}

TEST_CASE("fold assignment partitions rows evenly and deterministically") {
  const auto a = fold_assignment(103, 10, 7);
  CHECK(a == fold_assignment(103, 10, 7));
  CHECK(a != fold_assignment(103, 10, 8));
  std::vector<std::size_t> sizes(10, 0);
  for (auto f : a) ++sizes.at(f);
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*hi - *lo <= 1);

  const auto table = test::blobs(25, 3);
  const auto folds = split_folds(table, 5, 11);
  std::size_t validation_total = 0;
  for (const auto& f : folds) {
    CHECK(f.train.size() + f.validation.size() == table.size());
    validation_total += f.validation.size();
  }
  CHECK(validation_total == table.size());
  CHECK(code_of([] { fold_assignment(3, 5, 1); }) == ErrorCode::KTooLarge);
  CHECK(code_of([] { fold_assignment(10, 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("z-score normalizer") {
  Eigen::MatrixXd rows(4, 2);
  rows << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto p = fit_normalizer(rows);
  CHECK(p.mean[0] == doctest::Approx(2.5));
  CHECK(p.stddev[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(p.is_constant(1));
  const auto z = apply_normalizer(p, rows);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(1).isZero());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    CHECK((invert_normalizer(p, z.row(i).transpose()) - rows.row(i).transpose()).norm() < 1e-12);
  CHECK(code_of([] { fit_normalizer(Eigen::MatrixXd(0, 2)); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { apply_normalizer(p, Eigen::VectorXd(Eigen::VectorXd::Zero(3))); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("bundled datasets load") {
  const auto g = test::german();
  CHECK(g.size() == 1000);
  CHECK(g.schema().nominal_columns().size() == 13);
  CHECK(g.numeric_width() == 7);
  std::size_t good = 0;
  for (auto c : g.targets()) good += c == ClassLabel::Positive;
  CHECK(good == 700);
}
