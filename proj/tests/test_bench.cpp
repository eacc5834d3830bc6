#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypolab/bench.hpp"

using namespace hypolab;
using namespace hypolab::bench;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

json minimal(const std::string& out) {
  return json{{"potential", "harmonic"},
              {"gammas", {1.0}},
              {"grids", {{"growth", "-6:6:241"}}},
              {"suites", {"rates"}},
              {"output", out}};
}

}  // namespace

TEST(Config, UnknownKeyNamesSource) {
  json j = minimal("x");
  j["bogus"] = 1;
  try {
    parse_config(j, "conf.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "bad-config");
    EXPECT_NE(std::string(e.what()).find("conf.json"), std::string::npos);
  }
}

TEST(Config, RejectsBadValues) {
  json j = minimal("x");
  j["gammas"] = {1.0, -2.0};
  EXPECT_THROW(parse_config(j), Error);
  j = minimal("x");
  j["potential"] = "nope";
  EXPECT_THROW(parse_config(j), Error);
  j = minimal("x");
  j["suites"] = {"rates", "dance"};
  EXPECT_THROW(parse_config(j), Error);
}

TEST(Config, GammaRange) {
  json j = minimal("x");
  j.erase("gammas");
  j["gamma_range"] = {{"lo", 0.01}, {"hi", 100.0}, {"per_decade", 5}};
  EXPECT_EQ(parse_config(j).gammas.size(), 21u);
}

TEST(Sweep, MinimalAndDeterministic) {
  const auto dir = std::filesystem::temp_directory_path() / "hypolab-test-sweep";
  std::filesystem::remove_all(dir);
  const auto c = parse_config(minimal(dir.string()));
  const auto r1 = run(c);
  ASSERT_EQ(r1.rows.size(), 1u);
  EXPECT_GT(r1.rows[0].lambda, 0.0);
  const std::string csv1 = slurp(dir / "sweep.csv");
  run(c);
  EXPECT_EQ(csv1, slurp(dir / "sweep.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.txt"));
  std::filesystem::remove_all(dir);
}

TEST(Sweep, WeightedRowConsistency) {
  const auto dir = std::filesystem::temp_directory_path() / "hypolab-test-lyap";
  json j = minimal(dir.string());
  j["gammas"] = {0.5, 1.0};
  j["suites"] = {"lyapunov"};
  j["grids"]["phase"] = "-6:6:121,-8:8:81";
  j["lyapunov"] = {{"variant", "quad"}, {"eta", 0.5}, {"c3", 2.0}, {"c5", 0.5}};
  const auto r = run(parse_config(j));
  for (const auto& row : r.rows) {
    ASSERT_TRUE(std::isfinite(row.m));
    EXPECT_NEAR(row.m, 5.0 * 0.5 * row.lambda / row.beta, 1e-12 * row.m);
    EXPECT_NEAR(row.weighted_rate, std::min(row.lambda * 0.5, row.alpha / 2.0), 1e-15);
  }
  std::filesystem::remove_all(dir);
}

TEST(Format, SeventeenDigitsRoundTrip) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(fmt(v)), v);
}

TEST(Acceptance, RegistryIsStable) {
  const auto& reg = acceptance_registry();
  ASSERT_EQ(reg.size(), 10u);
  for (size_t i = 0; i < reg.size(); ++i) EXPECT_EQ(reg[i].id, static_cast<int>(i + 1));
  int sampler = 0;
  for (const auto& r : reg) sampler += r.sampler;
  EXPECT_EQ(sampler, 1);
}

TEST(Acceptance, SamplerSkipFilter) {
  AcceptanceOptions o;
  o.run_sampler = false;
  o.only = {1, 9};
  const auto res = run_acceptance(o);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_FALSE(res[0].skipped);
  EXPECT_TRUE(res[0].pass);
  EXPECT_TRUE(res[1].skipped);
}
