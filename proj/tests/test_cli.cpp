#include <doctest.h>

#include "symbar/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace symbar;
using namespace symbar::cli;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("symbar_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::map<std::string, std::string>> rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> head;
  std::vector<std::map<std::string, std::string>> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (head.empty()) {
      head = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < head.size() && i < cells.size(); ++i) row[head[i]] = cells[i];
    out.push_back(row);
  }
  return out;
}

const std::string kDao = R"(# GBM down-and-out call
model.name = gbm
model.sigma = 0.2
model.x0 = 100
barrier.type = single
barrier.K = 90
payoff.type = call
payoff.strike = 100
plan.paths = 20000
plan.steps = 100
plan.horizon = 1
plan.seed = 3
estimators = symmetrized, oracle-bridge, closed-form
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config grammar") {
  const Config c = Config::parse("a.b = 1  # trailing\n\n  # only comment\nlist = 1, 2.5 ,3\nname = hello world\n");
  CHECK(c.number("a.b") == 1.0);
  CHECK(c.numbers("list") == std::vector<double>{1, 2.5, 3});
  CHECK(c.text("name") == "hello world");
  CHECK_NOTHROW(c.reject_unused());
  CHECK(c.hash() == Config::parse("name=hello world\nlist=1, 2.5 ,3\na.b=1").hash());
  CHECK(c.hash() != Config::parse("name=hello world\nlist=1, 2.5 ,3\na.b=2").hash());

  CHECK_THROWS_AS(Config::parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a =\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("bad key = 1\n"), ConfigError);
  try {
    Config::parse("x = 1\n\ny = oops\n").number("y");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "y");
  }
}

TEST_CASE("zero payoff gives zero rows") {
  std::string cfg = kDao;
  cfg.replace(cfg.find("payoff.type = call\npayoff.strike = 100\n"), 39, "payoff.type = zero\n");
  cfg += "estimators.extra = 1\n";
  const auto bad = invoke({"price", write_temp("zero_bad.cfg", cfg)});
  CHECK(bad.code == kExitConfig);
  CHECK(bad.err.find("estimators.extra") != std::string::npos);

  cfg.erase(cfg.find("estimators.extra"));
  cfg.replace(cfg.find("estimators ="), std::string::npos,
              "estimators = symmetrized, oracle-bridge, oracle-discrete, closed-form\n");
  const auto r = invoke({"price", write_temp("zero.cfg", cfg)});
  REQUIRE(r.code == kExitOk);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 4);
  for (const auto& row : table) CHECK(std::stod(row.at("mean")) == 0.0);
}

TEST_CASE("dao rows agree") {
  const auto r = invoke({"price", write_temp("dao.cfg", kDao)});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("# symbar price\n# config_hash=", 0) == 0);
  CHECK(r.out.find("# seed=3\n") != std::string::npos);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 3);
  CHECK(t[0].at("label") == "symmetrized");
  CHECK(t[2].at("label") == "closed-form");

  std::string half = kDao;
  half.replace(half.find("plan.steps = 100"), 16, "plan.steps = 50");
  const auto h = rows(invoke({"price", write_temp("dao_half.cfg", half)}).out);
  for (int i = 0; i < 2; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double se = std::hypot(std::stod(t[i].at("stderr")), std::stod(t[j].at("stderr")));
      const double bias = std::abs(std::stod(t[i].at("mean")) - std::stod(h[i].at("mean"))) +
                          std::abs(std::stod(t[j].at("mean")) - std::stod(h[j].at("mean")));
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(std::stod(t[i].at("mean")) - std::stod(t[j].at("mean"))) <= 3.0 * se + bias);
    }
  }
}

TEST_CASE("output is independent of workers and can go to a file") {
  std::string cfg = kDao;
  cfg.replace(cfg.find("plan.paths = 20000"), 18, "plan.paths = 3000");
  const std::string path = write_temp("det.cfg", cfg);
  const auto one = invoke({"price", path, "--workers", "1"});
  const auto three = invoke({"price", path, "--workers", "3"});
  CHECK(one.code == 0);
  CHECK(one.out == three.out);
  const auto seeded = invoke({"price", path, "--seed", "99"});
  CHECK(seeded.out != one.out);
  CHECK(seeded.out.find("# seed=99\n") != std::string::npos);

  const std::string out = (std::filesystem::temp_directory_path() / "symbar_test_report.csv").string();
  std::filesystem::remove(out);
  const auto file = invoke({"price", path, "--out", out});
  CHECK(file.code == 0);
  CHECK(file.out.empty());
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == one.out);
}

TEST_CASE("malformed configs exit 2 with a diagnostic") {
  const auto missing = invoke({"price", write_temp("missing.cfg", "model.name = gbm\n")});
  CHECK(missing.code == kExitConfig);
  CHECK(missing.err.find("model.sigma") != std::string::npos);

  std::string bad = kDao;
  bad.replace(bad.find("plan.paths = 20000"), 18, "plan.paths = lots");
  const auto number = invoke({"price", write_temp("badnum.cfg", bad)});
  CHECK(number.code == kExitConfig);
  CHECK(number.err.find(":9: field 'plan.paths'") != std::string::npos);

  std::string heston = kDao;
  heston.replace(heston.find("model.name = gbm"), 16, "model.name = heston");
  heston += "model.v0 = 0.04\n";
  const auto cf = invoke({"price", write_temp("nocf.cfg", heston)});
  CHECK(cf.code == kExitConfig);
  CHECK(cf.err.find("closed form") != std::string::npos);

  std::string outside = kDao;
  outside.replace(outside.find("model.x0 = 100"), 14, "model.x0 = 80");
  CHECK(invoke({"price", write_temp("outside.cfg", outside)}).code == kExitConfig);

  CHECK(invoke({"price", "/nonexistent/symbar.cfg"}).code == kExitConfig);
  CHECK(invoke({"frobnicate"}).code == kExitConfig);
  CHECK(invoke({}).code == kExitConfig);
}

TEST_CASE("gap hits make a result untrusted") {
  const std::string cfg = R"(model.name = gbm
model.sigma = 0.2
model.x0 = 100
barrier.type = double
barrier.K = 90
barrier.K2 = 110
barrier.N = 0
payoff.type = call
payoff.strike = 95
plan.paths = 2000
plan.steps = 50
plan.horizon = 0.5
estimators = symmetrized
)";
  const std::string path = write_temp("gaps.cfg", cfg);
  const auto strict = invoke({"price", path});
  CHECK(strict.code == kExitUntrusted);
  CHECK(strict.out.empty());
  const auto relaxed = invoke({"price", path, "--allow-gaps"});
  CHECK(relaxed.code == kExitOk);
  CHECK(std::stoul(rows(relaxed.out).at(0).at("gap_hits")) > 0);
}

TEST_CASE("convergence sweeps") {
  std::string cfg = kDao;
  cfg.replace(cfg.find("estimators ="), std::string::npos, "estimators = oracle-discrete\n");
  const std::string path = write_temp("conv.cfg", cfg);
  const auto r = invoke({"convergence", path, "--steps", "25,50,100,200", "--paths", "20000,40000"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("# reference=closed-form") != std::string::npos);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 8);
  for (std::size_t i = 0; i < 8; i += 2) {
    const double ratio = std::stod(t[i + 1].at("stderr")) / std::stod(t[i].at("stderr"));
    CHECK(std::abs(ratio - 1.0 / std::sqrt(2.0)) <= 0.2 / std::sqrt(2.0));
  }
  for (std::size_t i = 1; i + 2 < 8; i += 2) {
    CHECK(std::abs(std::stod(t[i + 2].at("error"))) < std::abs(std::stod(t[i].at("error"))));
  }

  CHECK(invoke({"convergence", path, "--steps", "", "--paths", "10"}).code == kExitConfig);
  CHECK(invoke({"convergence", path, "--steps", "10", "--paths", ","}).code == kExitConfig);
  CHECK(invoke({"convergence", path, "--steps", "10"}).code == kExitConfig);
}

TEST_CASE("group inspect") {
  const auto single = invoke({"group", "inspect", write_temp("g1.cfg", "barrier.type = single\nbarrier.K = 90\n")});
  REQUIRE(single.code == kExitOk);
  CHECK(rows(single.out).size() == 2);
  CHECK(single.out.find("complete=true") != std::string::npos);

  const auto quad = invoke({"group", "inspect", write_temp("g2.cfg", R"(barrier.type = hyperplanes
barrier.planes = 2
barrier.plane0.alpha = 1, 0
barrier.plane0.k = 0
barrier.plane1.alpha = 0, 1
barrier.plane1.k = 0
barrier.witness = 1, 1
)")});
  REQUIRE(quad.code == kExitOk);
  const auto t = rows(quad.out);
  REQUIRE(t.size() == 4);
  int eta = 0;
  for (const auto& row : t) eta += std::stoi(row.at("eta"));
  CHECK(eta == 0);
  CHECK(t[0].count("T11") == 1);
  CHECK(t[0].count("b1") == 1);

  const auto wedge = invoke({"group", "inspect", write_temp("g3.cfg", R"(barrier.type = hyperplanes
barrier.planes = 2
barrier.plane0.alpha = 0, 1
barrier.plane0.k = 0
barrier.plane1.alpha = 0.8414709848078965, -0.5403023058681398
barrier.plane1.k = 0
barrier.witness = 1, 0.1
)")});
  CHECK(wedge.code == kExitGroup);
  CHECK(wedge.err.find("chambers of [") != std::string::npos);

  const auto shared = invoke({"group", "inspect", write_temp("g4.cfg", kDao)});
  CHECK(shared.code == kExitOk);
  CHECK(rows(shared.out).size() == 2);
}

TEST_CASE("every barrier kind prices") {
  const std::string moving = R"(model.name = gbm
model.sigma = 0.2
model.x0 = 100
barrier.type = moving
barrier.K = 90
barrier.growth = 0.1
payoff.type = indicator
plan.paths = 2000
plan.steps = 50
plan.horizon = 1
estimators = symmetrized, oracle-discrete
)";
  const auto m = invoke({"price", write_temp("moving.cfg", moving)});
  REQUIRE(m.code == kExitOk);
  const auto mt = rows(m.out);
  CHECK(std::abs(std::stod(mt[0].at("mean")) - std::stod(mt[1].at("mean"))) < 0.1);

  const std::string heston = R"(model.name = heston
model.x0 = 100
model.v0 = 0.04
discount.rate = 0.02
barrier.type = single
barrier.K = 90
payoff.type = call
payoff.strike = 100
plan.paths = 2000
plan.steps = 50
plan.horizon = 1
estimators = symmetrized, oracle-bridge
)";
  const auto h = invoke({"price", write_temp("heston.cfg", heston)});
  REQUIRE(h.code == kExitOk);
  const auto ht = rows(h.out);
  CHECK(std::stod(ht[0].at("discounted")) == doctest::Approx(std::exp(-0.02) * std::stod(ht[0].at("mean"))));

  const std::string abm = R"(model.name = abm
model.sigma = 1
model.x0 = 1
barrier.type = single
barrier.K = 0
payoff.type = indicator
plan.paths = 1000
plan.steps = 20
plan.horizon = 1
estimators = closed-form
)";
  const auto a = invoke({"price", write_temp("abm.cfg", abm)});
  REQUIRE(a.code == kExitOk);
  CHECK(std::stod(rows(a.out).at(0).at("mean")) == doctest::Approx(0.682689492137086));
}

}
