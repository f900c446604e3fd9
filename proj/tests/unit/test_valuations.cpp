#include <gtest/gtest.h>

#include "saac/io.hpp"
#include "saac/valuations.hpp"

using namespace saac;

TEST(Generator, ZeroCapGivesSubadditiveFunctions) {
  GeneratorParams gp;
  gp.v_cap = 0.0;
  Rng rng = make_rng(21);
  for (int draw = 0; draw < 1000; ++draw) {
    const int m = 1 + draw % 4;
    const auto v = generate_value_function(m, gp, rng);
    const ItemSet full = (ItemSet{1} << m) - 1;
    for (ItemSet x = 0; x <= full; ++x)
      for (ItemSet y = 0; y <= full; ++y)
        if ((x & y) == 0) ASSERT_LE(v(x | y), v(x) + v(y) + 1e-12) << "draw " << draw;
  }
}

TEST(Generator, FreeDisposalByConstruction) {
  Rng rng = make_rng(22);
  for (int draw = 0; draw < 500; ++draw) {
    const int m = 1 + draw % 5;
    const auto v = generate_value_function(m, {}, rng);
    const ItemSet full = (ItemSet{1} << m) - 1;
    // Every subset pair, not only covering pairs.
    for (ItemSet x = 0; x <= full; ++x)
      for (ItemSet y = x;; y = (y + 1) | x) {
        ASSERT_LE(v(x), v(y) + 1e-12);
        if (y == full) break;
      }
    EXPECT_TRUE(check_free_disposal(v));
  }
}

TEST(Generator, SingletonMeanIsHalfTheCap) {
  Rng rng = make_rng(23);
  double sum = 0.0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const auto v = generate_value_function(1, {}, rng);
    ASSERT_GE(v(1), 0.0);
    ASSERT_LE(v(1), 5.0);
    sum += v(1);
  }
  EXPECT_NEAR(sum / draws, 2.5, 0.1);
}

TEST(Generator, BundleWithinBounds) {
  Rng rng = make_rng(24);
  const GeneratorParams gp;
  for (int draw = 0; draw < 300; ++draw) {
    const int m = 2 + draw % 3;
    const auto v = generate_value_function(m, gp, rng);
    for (ItemSet x = 1; x < (ItemSet{1} << m); ++x) {
      if (item_count(x) < 2) continue;
      double lower = -1.0;
      int jstar = -1;
      for (int j = 0; j < m; ++j)
        if (contains(x, j) && v(x & ~singleton(j)) > lower) {
          lower = v(x & ~singleton(j));
          jstar = j;
        }
      ASSERT_GE(v(x), lower - 1e-12);
      ASSERT_LE(v(x), gp.v_cap + lower + v(singleton(jstar)) + 1e-12);
    }
  }
}

TEST(Generator, ReproducibleFromSeed) {
  const auto a = generate_instance(3, 4, 1.0, {}, 99);
  const auto b = generate_instance(3, 4, 1.0, {}, 99);
  const auto c = generate_instance(3, 4, 1.0, {}, 100);
  EXPECT_EQ(a.profiles, b.profiles);
  EXPECT_NE(a.profiles, c.profiles);
  for (const auto& p : a.profiles) {
    EXPECT_GE(p.budget, 10.0);
    EXPECT_LE(p.budget, 40.0);
  }
}

TEST(FreeDisposal, TableOneAndExplicitViolation) {
  EXPECT_TRUE(check_free_disposal(ValueFunction{2, {0, 12, 12, 12}}));
  const ValueFunction bad{2, {0, 5, 0, 3}};
  EXPECT_FALSE(check_free_disposal(bad));
  const auto pair = free_disposal_violation(bad);
  ASSERT_TRUE(pair.has_value());
  EXPECT_EQ(pair->first, ItemSet{1});
  EXPECT_EQ(pair->second, ItemSet{3});
}

TEST(ExampleOne, TableValues) {
  const auto inst = example1_instance();
  EXPECT_EQ(inst.profiles[0].values(3), 12.0);
  EXPECT_EQ(inst.profiles[0].values(1), 12.0);
  EXPECT_EQ(inst.profiles[1].values(1), 0.0);
  EXPECT_EQ(inst.profiles[1].values(2), 0.0);
  EXPECT_EQ(inst.profiles[1].values(3), 20.0);
  EXPECT_EQ(inst.config.epsilon, 1.0);
}

TEST(ValueFunctionChecks, RejectsMalformedTables) {
  EXPECT_THROW(ValueFunction(2, {0, 1, 2}), ConfigError);
  EXPECT_THROW(ValueFunction(1, {1, 2}), ConfigError);
  EXPECT_THROW(ValueFunction(1, {0, std::nan("")}), ConfigError);
  EXPECT_THROW(ValueFunction(0, {0}), ConfigError);
}

TEST(InstanceJson, RoundTripAndValidation) {
  const auto inst = generate_instance(2, 3, 0.5, {}, 5);
  const auto back = instance_from_json(nlohmann::json::parse(instance_to_json(inst).dump()));
  EXPECT_EQ(back.profiles, inst.profiles);
  EXPECT_EQ(back.config.epsilon, 0.5);

  auto j = instance_to_json(example1_instance());
  j["bidders"][0]["values"]["table"] = {0, 5, 0, 3};
  try {
    instance_from_json(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("v({0}) > v({0,1})"), std::string::npos) << e.what();
  }
  auto one = instance_to_json(example1_instance());
  one["config"]["n"] = 1;
  one["bidders"].erase(1);
  EXPECT_THROW(instance_from_json(one), ConfigError);
}
