#include <gtest/gtest.h>

#include "saac/price_prediction.hpp"

using namespace saac;

TEST(ClosedForm, Cases) {
  EXPECT_EQ(closed_form_example1(std::vector<Money>{0, 0}), (PricePrediction{11.5, 11}));
  EXPECT_EQ(closed_form_example1(std::vector<Money>{5, 5}), (PricePrediction{11.5, 11}));
  EXPECT_EQ(closed_form_example1(std::vector<Money>{11, 10}), (PricePrediction{0, 1}));
  EXPECT_EQ(closed_form_example1(std::vector<Money>{10.5, 10.5}), (PricePrediction{1, 0}));
  EXPECT_EQ(closed_form_example1(std::vector<Money>{6, 3}), (PricePrediction{11, 11.5}));
  EXPECT_THROW(closed_form_example1(std::vector<Money>{12, 0}), std::domain_error);
}

TEST(Estimator, ExampleOneAtZero) {
  const auto inst = example1_instance();
  const auto est = estimate_expected_closing(inst, std::vector<Money>{0, 0}, 10000, 17);
  EXPECT_NEAR(est[0], 11.5, 0.05);
  EXPECT_NEAR(est[1], 11.0, 0.05);
}

TEST(Estimator, HighPredictionGivesExactOneZero) {
  const auto inst = example1_instance();
  EXPECT_EQ(estimate_expected_closing(inst, std::vector<Money>{10.5, 10.5}, 500, 3), (PricePrediction{1, 0}));
}

TEST(Estimator, UnopposedBidderOpensWantedItemsOnly) {
  Instance inst;
  inst.config = AuctionConfig{2, 3, 1.0, 0};
  inst.profiles.push_back({100.0, ValueFunction::additive({5, 0.5, 3})});
  inst.profiles.push_back({100.0, ValueFunction::zero(3)});
  EXPECT_EQ(estimate_expected_closing(inst, std::vector<Money>{0, 0, 0}, 50, 1), (PricePrediction{1, 0, 1}));
}

TEST(Estimator, IndependentOfWorkerCount) {
  const auto inst = generate_instance(3, 3, 1.0, {}, 12);
  const std::vector<Money> p{2, 3, 4};
  EXPECT_EQ(estimate_expected_closing(inst, p, 400, 9, 1), estimate_expected_closing(inst, p, 400, 9, 3));
}

TEST(Estimator, MatchesClosedFormOnCoarseGrid) {
  const auto inst = example1_instance();
  for (double a : {0.0, 5.75, 11.5})
    for (double b : {0.0, 5.75, 11.5}) {
      const std::vector<Money> p{a, b};
      const auto est = estimate_expected_closing(inst, p, 4000, 5);
      const auto cf = closed_form_example1(p);
      EXPECT_NEAR(est[0], cf[0], 0.1) << a << "," << b;
      EXPECT_NEAR(est[1], cf[1], 0.1) << a << "," << b;
    }
}

TEST(Iterate, ZeroValueInstanceStaysAtZero) {
  Instance inst;
  inst.config = AuctionConfig{3, 2, 1.0, 0};
  for (int i = 0; i < 3; ++i) inst.profiles.push_back({20.0, ValueFunction::zero(2)});
  PredictorParams p;
  p.mc_samples = 20;
  const auto r = iterate_prediction(inst, p);
  EXPECT_EQ(r.p_star, PricePrediction(2, 0.0));
  EXPECT_TRUE(r.trace.converged);
}

TEST(Iterate, ExampleOneApproachesTenTen) {
  const auto inst = example1_instance();
  PredictorParams p;
  p.mc_samples = 400;
  p.max_iters = 80;
  p.tolerance = 1e-12;
  p.rng_seed = 4;
  int calls = 0;
  const auto r = iterate_prediction(inst, p, [&](int t, int total) {
    ++calls;
    EXPECT_EQ(total, 80);
    EXPECT_EQ(t, calls);
  });
  EXPECT_EQ(calls, 80);
  EXPECT_EQ(r.trace.iterates.size(), 81u);
  EXPECT_EQ(r.trace.deltas.size(), 80u);
  EXPECT_NEAR(r.p_star[0], 10.0, 0.6);
  EXPECT_NEAR(r.p_star[1], 10.0, 0.6);
}

TEST(Iterate, DeterministicAndBounded) {
  const auto inst = generate_instance(2, 3, 1.0, {}, 31);
  PredictorParams p;
  p.mc_samples = 100;
  p.max_iters = 20;
  p.rng_seed = 77;
  const auto a = iterate_prediction(inst, p);
  const auto b = iterate_prediction(inst, p);
  EXPECT_EQ(a.p_star, b.p_star);
  EXPECT_EQ(a.trace.iterates, b.trace.iterates);
  double max_budget = 0.0;
  for (const auto& prof : inst.profiles) max_budget = std::max(max_budget, prof.budget);
  for (const auto& it : a.trace.iterates)
    for (Money x : it) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, max_budget + inst.config.epsilon);
    }
}

TEST(Iterate, StopsOnceDeltaBelowTolerance) {
  const auto inst = example1_instance();
  PredictorParams p;
  p.mc_samples = 200;
  p.max_iters = 300;
  p.tolerance = 0.1;
  const auto r = iterate_prediction(inst, p);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LT(r.trace.deltas.back(), 0.1);
  for (std::size_t t = 0; t + 1 < r.trace.deltas.size(); ++t) EXPECT_GE(r.trace.deltas[t], 0.1);
}

TEST(Iterate, RejectsBadParams) {
  const auto inst = example1_instance();
  PredictorParams p;
  p.mc_samples = 0;
  EXPECT_THROW(iterate_prediction(inst, p), ConfigError);
  p = {};
  p.tolerance = 0;
  EXPECT_THROW(iterate_prediction(inst, p), ConfigError);
}

TEST(Iterate, TraceCsvHasOneRowPerIterate) {
  const auto inst = example1_instance();
  PredictorParams p;
  p.mc_samples = 20;
  p.max_iters = 5;
  p.tolerance = 1e-12;
  const auto csv = trace_to_csv(iterate_prediction(inst, p).trace);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}
