#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "choicerm/instance.hpp"
#include "choicerm/io.hpp"
#include "oracles.hpp"

using namespace choicerm;

namespace {

// a = 10, b = 5 with one resource; tests override the capacity
Instance resource_example() {
  auto inst = oracle::single_product(10, 5, 10, 20);
  inst.m = 1;
  inst.A = {1};
  inst.c = {1};
  return inst;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Instance, ValidateNamesTheField) {
  auto inst = oracle::single_product(10, 5, 100, 150);
  EXPECT_NO_THROW(inst.validate());
  auto bad = inst;
  bad.l = {200};
  try {
    bad.validate();
    FAIL();
  } catch (const InstanceError& e) {
    EXPECT_NE(std::string(e.what()).find("lower bound l must be below upper bound u"), std::string::npos);
  }
  bad = inst;
  bad.mnl.b = {-1};
  EXPECT_THROW(bad.validate(), InstanceError);
  bad = inst;
  bad.m = 1;
  bad.A = {2};
  bad.c = {1};
  EXPECT_THROW(bad.validate(), InstanceError);
  bad.A = {1};
  bad.c = {1.5};
  EXPECT_THROW(bad.validate(), InstanceError);
  bad = inst;
  bad.lambda = 1.5;
  EXPECT_THROW(bad.validate(), InstanceError);
  bad = inst;
  bad.d = {1};
  EXPECT_THROW(bad.validate(), InstanceError);
}

TEST(Instance, GeneratorIsDeterministicAndInRange) {
  GeneratorSpec spec{8, 4, 50, 30, 11, 3};
  auto a = generate(spec);
  auto b = generate(spec);
  EXPECT_EQ(a, b);
  spec.seed = 12;
  EXPECT_FALSE(a == generate(spec));
  ASSERT_EQ(a.n(), 8u);
  for (std::size_t j = 0; j < a.n(); ++j) {
    EXPECT_GE(a.mnl.a[j], 10);
    EXPECT_LT(a.mnl.a[j], 100);
    EXPECT_GE(a.mnl.b[j], 1);
    EXPECT_LT(a.mnl.b[j], 100);
    EXPECT_GE(a.l[j], 100);
    EXPECT_LT(a.l[j], 150);
    EXPECT_GE(a.u[j], 250);
    EXPECT_LT(a.u[j], 400);
  }
  for (double v : a.c) EXPECT_EQ(v, 30.0);
  EXPECT_EQ(a.lambda, 1.0);
  const double su = std::accumulate(a.u.begin(), a.u.end(), 0.0);
  for (std::size_t i = 0; i < a.p(); ++i) {
    double ones = 0, floor_sum = 0;
    for (std::size_t j = 0; j < a.n(); ++j) {
      ones += a.b_ij(i, j);
      floor_sum += a.b_ij(i, j) * a.l[j];
    }
    EXPECT_GE(ones, 4);
    EXPECT_LE(ones, 6);
    EXPECT_GE(a.d[i], 0.3 * su);
    EXPECT_LE(a.d[i], 0.5 * su);
    EXPECT_LE(floor_sum, a.d[i]);
  }
}

TEST(Instance, GeneratorRejectsEmptyDimensions) {
  GeneratorSpec spec;
  spec.n = 0;
  EXPECT_THROW(generate(spec), std::invalid_argument);
}

TEST(Feasibility, LowerBoundsWithLooseCapacity) {
  auto inst = generate({3, 2, 200, 1000000, 7, 3});
  FeasiblePriceRegion region;
  region.instance = &inst;
  EXPECT_TRUE(is_feasible(region, inst.l).feasible());
}

TEST(Feasibility, BoxViolationReportsSlack) {
  auto inst = oracle::single_product(10, 5, 100, 150);
  FeasiblePriceRegion region;
  region.instance = &inst;
  std::vector<double> r{151};
  auto rep = is_feasible(region, r);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].kind, RowKind::UpperBound);
  EXPECT_NEAR(rep.violations[0].excess, 1.0, 1e-12);
  std::vector<double> null{kNullPrice};
  EXPECT_TRUE(is_feasible(region, null).feasible());
}

TEST(Feasibility, SlackAdmitsSmallResourceExcess) {
  auto inst = resource_example();
  FeasiblePriceRegion region;
  region.instance = &inst;
  region.capacity_override = std::vector<double>{0.2};
  std::vector<double> r{15};
  EXPECT_FALSE(is_feasible(region, r).feasible());
  region.mode = RegionMode::Slack;
  region.epsilon = 0.1;
  auto rep = is_feasible(region, r);
  EXPECT_TRUE(rep.feasible());
  EXPECT_NEAR(rep.max_resource_excess, 0.294304 - 0.2, 1e-6);
}

TEST(Feasibility, EpsilonMonotone) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = oracle::small_instance(rng, 4, 2, 10, 1, 2);
    std::vector<double> r(4);
    for (std::size_t j = 0; j < 4; ++j) r[j] = rng.uniform(inst.l[j], inst.u[j]);
    FeasiblePriceRegion region;
    region.instance = &inst;
    region.mode = RegionMode::Slack;
    region.demand_scale = rng.uniform(0.5, 5);
    bool was = false;
    for (double eps : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0}) {
      region.epsilon = eps;
      const bool now = is_feasible(region, r).feasible();
      if (was) {
        EXPECT_TRUE(now);
      }
      was = now;
    }
  }
}

TEST(Io, RoundTripAndHash) {
  auto inst = generate({5, 3, 40, 20, 9, 2});
  const auto path = temp_path("choicerm_io_roundtrip.json");
  save(inst, path);
  auto back = load(path);
  EXPECT_EQ(inst, back);
  EXPECT_EQ(instance_hash(inst), instance_hash(back));
  back.c[0] += 1;
  EXPECT_NE(instance_hash(inst), instance_hash(back));
  std::filesystem::remove(path);
}

TEST(Io, SchemaErrorsNameTheField) {
  auto doc = to_json(generate({3, 2, 10, 5, 1, 1}));
  auto expect_error = [](const nlohmann::json& d, const std::string& needle) {
    try {
      instance_from_json(d);
      ADD_FAILURE() << "accepted: " << needle;
    } catch (const SchemaError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto d = doc;
  d.erase("b");
  expect_error(d, "'b'");
  d = doc;
  d["a"] = {1, 2};
  expect_error(d, "'a'");
  d = doc;
  d["schema_version"] = 7;
  expect_error(d, "schema_version");
  d = doc;
  d["l"][0] = 1000;
  expect_error(d, "lower bound");
  d = doc;
  d["c"][0] = "x";
  expect_error(d, "c[0]");
  EXPECT_THROW(instance_from_json(nlohmann::json::array()), SchemaError);
}

TEST(Io, MalformedFileIsSchemaError) {
  const auto path = temp_path("choicerm_io_bad.json");
  detail::write_file(path, "{ not json");
  EXPECT_THROW(load(path), SchemaError);
  std::filesystem::remove(path);
  EXPECT_THROW(load(temp_path("choicerm_missing_file.json")), std::runtime_error);
}
