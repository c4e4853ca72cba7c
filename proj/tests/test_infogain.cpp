#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gkmnc/error.hpp"
#include "gkmnc/infogain.hpp"
#include "support.hpp"

using namespace gkmnc;

namespace {

const char* kSchema = "a = nominal\nb = nominal\nx = numeric\nlabel = target\npositive_label = +\n";

DataTable table_of(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   const std::vector<std::string>& y) {
  std::ostringstream csv;
  csv << "a,b,x,label\n";
  for (std::size_t i = 0; i < y.size(); ++i) csv << a[i] << ',' << b[i] << ",0," << y[i] << '\n';
  return test::from_csv(kSchema, csv.str());
}

// Textbook definitions in natural log, converted to bits at the end.
GainRatio oracle(const std::vector<std::string>& values, const std::vector<std::string>& labels) {
  const double n = static_cast<double>(values.size());
  const auto h = [](const std::map<std::string, double>& counts) {
    double total = 0, out = 0;
    for (auto& [k, c] : counts) total += c;
    for (auto& [k, c] : counts)
      if (c > 0) out -= c / total * std::log(c / total);
    return out / std::log(2.0);
  };
  std::map<std::string, double> cls, val;
  std::map<std::string, std::map<std::string, double>> joint;
  for (std::size_t i = 0; i < values.size(); ++i) {
    cls[labels[i]] += 1;
    val[values[i]] += 1;
    joint[values[i]][labels[i]] += 1;
  }
  double cond = 0;
  for (auto& [v, m] : joint) cond += val[v] / n * h(m);
  GainRatio g;
  g.info_gain = h(cls) - cond;
  g.split_info = h(val);
  g.ratio = g.info_gain / g.split_info;
  return g;
}

}  // namespace

TEST_CASE("entropy in bits") {
  const std::size_t uniform[] = {2, 2}, pure[] = {4, 0}, skew[] = {3, 1}, zero[] = {0, 0};
  CHECK(entropy(uniform) == doctest::Approx(1.0));
  CHECK(entropy(pure) == 0.0);
  CHECK(entropy(skew) == doctest::Approx(-0.75 * std::log2(0.75) - 0.25 * std::log2(0.25)).epsilon(1e-12));
  CHECK(entropy(skew) == doctest::Approx(0.8113).epsilon(1e-4));
  CHECK_THROWS_AS(entropy(zero), Error);
}

TEST_CASE("gain ratio small cases") {
  const auto perfect = gain_ratio(table_of({"a", "a", "b", "b"}, {"u", "v", "u", "v"}, {"+", "+", "-", "-"}), 0);
  CHECK(perfect.info_gain == doctest::Approx(1.0));
  CHECK(perfect.split_info == doctest::Approx(1.0));
  CHECK(perfect.ratio == doctest::Approx(1.0));

  const auto partial = gain_ratio(table_of({"a", "a", "a", "b"}, {"u", "v", "u", "v"}, {"+", "+", "-", "-"}), 0);
  CHECK(partial.info_gain == doctest::Approx(0.3113).epsilon(1e-3));
  CHECK(partial.split_info == doctest::Approx(0.8113).epsilon(1e-3));
  CHECK(partial.ratio == doctest::Approx(0.3837).epsilon(1e-3));

  try {
    gain_ratio(table_of({"a", "a", "a", "a"}, {"u", "v", "u", "v"}, {"+", "+", "-", "-"}), 0);
    FAIL("single-valued attribute accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SplitInfoZero);
  }
}

TEST_CASE("gain ratio agrees with a direct oracle on random tables") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng() % 60;
    const int arity = 2 + static_cast<int>(rng() % 5);
    std::vector<std::string> a, b, y;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(std::string(1, static_cast<char>('a' + rng() % arity)));
      b.push_back(i % 2 ? "u" : "v");
      y.push_back(rng() % 3 ? "+" : "-");
    }
    if (std::set<std::string>(a.begin(), a.end()).size() < 2) continue;
    const auto got = gain_ratio(table_of(a, b, y), 0);
    const auto want = oracle(a, y);
    CHECK(std::abs(got.info_gain - want.info_gain) < 1e-12);
    CHECK(std::abs(got.split_info - want.split_info) < 1e-12);
    CHECK(std::abs(got.ratio - want.ratio) < 1e-12);
  }
}

TEST_CASE("grouping selection and ranking") {
  // a determines the label; b is noise; numeric columns are never ranked
  const auto t = table_of({"a", "a", "b", "b", "a", "b"}, {"u", "v", "u", "v", "v", "u"}, {"+", "+", "-", "-", "+", "-"});
  const auto sel = select_grouping_attribute(t);
  REQUIRE(sel.column.has_value());
  CHECK(*sel.column == 0);
  CHECK(sel.report.entries.size() == 2);
  CHECK(sel.report.find(0)->rank == 1);
  CHECK(sel.report.find(1)->rank == 2);

  // nothing clears a threshold above the best ratio
  CHECK_FALSE(select_grouping_attribute(t, 1.5).column.has_value());

  // single-valued attributes are excluded, not fatal
  const auto t2 = table_of({"a", "a", "a", "a"}, {"u", "v", "u", "v"}, {"+", "-", "+", "-"});
  const auto sel2 = select_grouping_attribute(t2);
  CHECK(sel2.report.find(0)->excluded);

  const auto none = test::from_csv("x = numeric\nlabel = target\npositive_label = +\n", "x,label\n1,+\n2,-\n");
  const auto sel3 = select_grouping_attribute(none);
  CHECK_FALSE(sel3.column.has_value());
  CHECK(sel3.report.entries.empty());
}

TEST_CASE("mean report and partition") {
  const auto t = table_of({"a", "a", "b", "b", "a", "b"}, {"u", "v", "u", "v", "v", "u"}, {"+", "+", "-", "-", "+", "-"});
  const auto r = select_grouping_attribute(t).report;
  const GainRatioReport pair[] = {r, r};
  const auto m = mean_report(pair);
  CHECK(m.find(0)->value.ratio == doctest::Approx(r.find(0)->value.ratio));

  const auto parts = partition_by_attribute(t, 0);
  REQUIRE(parts.size() == 2);
  CHECK(parts.at("a").size() == 3);
  CHECK(parts.at("b").size() == 3);
}

TEST_CASE("german credit top attribute") {
  const auto sel = select_grouping_attribute(test::german());
  REQUIRE(sel.column.has_value());
  CHECK(*sel.column == 0);
  CHECK(sel.report.find(0)->value.ratio == doctest::Approx(0.05257).epsilon(0.04));
}
