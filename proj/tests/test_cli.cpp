#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "support.hpp"

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = gkmnc::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Fixture {
  test::TempDir dir{"cli"};
  std::string data, test_data, schema, model;
  Fixture() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    const auto write = [&](const std::string& name, std::size_t n) {
      std::ofstream f(dir.path / name);
      f << "shop,x,y,label\n";
      for (std::size_t i = 0; i < n; ++i) {
        const double x = g(rng), y = g(rng);
        f << (i % 3 ? "a" : "b") << ',' << x << ',' << y << ',' << (x + y > 0 ? "yes" : "no") << '\n';
      }
      return (dir.path / name).string();
    };
    data = write("train.csv", 160);
    test_data = write("test.csv", 40);
    schema = (dir.path / "s.schema").string();
    std::ofstream(schema) << "shop = nominal\nx = numeric\ny = numeric\nlabel = target\npositive_label = yes\n";
    model = (dir.path / "m.json").string();
  }
  std::string path(const std::string& name) const { return (dir.path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  Fixture fx;
  CHECK(cli({}).code == 2);
  CHECK(cli({"train", "--schema", fx.schema, "--out", fx.model}).code == 2);
  CHECK(cli({"crossval", "--data", fx.data, "--schema", fx.schema, "--folds", "1"}).code == 2);
  CHECK(cli({"inspect", "--data", fx.data, "--schema", fx.schema, "--group-attr", "x"}).code == 2);
  CHECK(cli({"inspect", "--data", fx.data, "--schema", fx.schema, "--group-attr", "nope"}).code == 2);
  CHECK(cli({"train", "--data", fx.data, "--schema", fx.schema, "--out", fx.model, "--set", "bogus=1"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("data, training and io failures map to their exit codes") {
  Fixture fx;
  std::ofstream(fx.path("bad.csv")) << "shop,x,label\na,1,yes\n";
  CHECK(cli({"train", "--data", fx.path("bad.csv"), "--schema", fx.schema, "--out", fx.model}).code == 3);
  CHECK(cli({"train", "--data", fx.path("none.csv"), "--schema", fx.schema, "--out", fx.model}).code == 5);
  const auto r = cli({"train", "--data", fx.data, "--schema", fx.schema, "--out", fx.model, "--set",
                      "classifier=gpc", "--set", "grouping=off", "--set", "clustering=off", "--set",
                      "gpc_size_cap=50", "--manifest", fx.path("t.manifest")});
  CHECK(r.code == 4);
  CHECK(r.err.find("PartitionTooLarge") != std::string::npos);
  std::ofstream(fx.path("junk.json")) << "{\"format\":";
  CHECK(cli({"predict", "--model", fx.path("junk.json"), "--data", fx.test_data}).code == 5);
}

TEST_CASE("train, predict and evaluate agree") {
  Fixture fx;
  const auto t = cli({"train", "--data", fx.data, "--schema", fx.schema, "--out", fx.model, "--set", "hidden_size=2",
                      "--set", "clustering=off"});
  REQUIRE(t.code == 0);
  CHECK(t.out.rfind("model,", 0) == 0);
  CHECK(std::filesystem::exists(fx.model + ".gain_ratios.csv"));
  CHECK(std::filesystem::exists(fx.model + ".groups.csv"));
  CHECK(std::filesystem::exists(fx.model + ".manifest"));

  const auto p = cli({"predict", "--model", fx.model, "--data", fx.test_data});
  REQUIRE(p.code == 0);
  const auto e = cli({"evaluate", "--model", fx.model, "--data", fx.test_data, "--manifest", fx.path("e.manifest")});
  REQUIRE(e.code == 0);

  // accuracy recomputed from the prediction rows
  std::istringstream preds(p.out), truth(slurp(fx.test_data));
  std::string line, tline;
  std::getline(preds, line);
  std::getline(truth, tline);
  std::size_t n = 0, hits = 0;
  while (std::getline(preds, line) && std::getline(truth, tline)) {
    std::istringstream cells(line);
    std::string row, cls;
    std::getline(cells, row, ',');
    std::getline(cells, cls, ',');
    const bool yes = tline.substr(tline.rfind(',') + 1) == "yes";
    hits += (cls == "1") == yes;
    ++n;
  }
  CHECK(n == 40);
  std::ostringstream want;
  want << "overall,,," << n << ',';
  CHECK(e.out.find(want.str()) != std::string::npos);
  const auto overall = e.out.substr(e.out.find(want.str()) + want.str().size());
  CHECK(std::stod(overall) == doctest::Approx(static_cast<double>(hits) / static_cast<double>(n)).epsilon(1e-6));

  std::ofstream(fx.path("empty.csv")).close();
  const auto empty = cli({"predict", "--model", fx.model, "--data", fx.path("empty.csv"), "--out", fx.path("p.csv")});
  CHECK(empty.code == 0);
  CHECK(slurp(fx.path("p.csv")).empty());
}

TEST_CASE("crossval reports are byte identical across runs and worker counts") {
  Fixture fx;
  const std::vector<std::string> base{"crossval", "--data", fx.data, "--schema", fx.schema, "--folds", "4",
                                      "--set", "hidden_size=2", "--manifest", fx.path("c.manifest")};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", fx.path("a.csv"), "--workers", "1"});
  b.insert(b.end(), {"--out", fx.path("b.csv"), "--workers", "4"});
  REQUIRE(cli(a).code == 0);
  REQUIRE(cli(b).code == 0);
  CHECK(slurp(fx.path("a.csv")) == slurp(fx.path("b.csv")));
  CHECK(!slurp(fx.path("a.csv")).empty());
}

TEST_CASE("inspect lists gain ratios and per-group curves") {
  Fixture fx;
  const auto r = cli({"inspect", "--data", fx.data, "--schema", fx.schema, "--group-attr", "shop", "--manifest",
                      fx.path("i.manifest")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("attribute,name,info_gain") != std::string::npos);
  CHECK(r.out.find("group,rows,k,dbi") != std::string::npos);
}
