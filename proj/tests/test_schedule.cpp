#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "spectrain/errors.hpp"
#include "spectrain/rng.hpp"
#include "spectrain/schedule.hpp"

using namespace spectrain;

TEST(StepsForStage, ComputeBalanced) {
  EXPECT_EQ(steps_for_stage(150, 3, 50, 25), 200);
  EXPECT_EQ(steps_for_stage(150, 3, 50, 50), 50);
  EXPECT_EQ(steps_for_stage(10, 5, 64, 64), 2);
  EXPECT_EQ(steps_for_stage(1, 5, 64, 64), 1);
  EXPECT_THROW(steps_for_stage(150, 3, 50, 51), ArgumentError);
  EXPECT_THROW(steps_for_stage(0, 3, 50, 25), ArgumentError);
}

TEST(StepsForStage, NonincreasingInResolution) {
  for (int b = 2; b <= 64; ++b) EXPECT_LE(steps_for_stage(300, 3, 64, b), steps_for_stage(300, 3, 64, b - 1));
}

TEST(StepsForStage, BudgetSlackBounded) {
  CounterRng r(1, 1);
  for (int t = 0; t < 200; ++t) {
    const long long total = 1 + static_cast<long long>(r.below(5000));
    const int n = 1 + static_cast<int>(r.below(6));
    const int b0 = 8 + static_cast<int>(r.below(57));
    long double used = 0.0;
    for (int i = 0; i < n; ++i) {
      const int b = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(b0)));
      used += static_cast<long double>(steps_for_stage(total, n, b0, b)) * b * b / (static_cast<long double>(b0) * b0);
    }
    EXPECT_LE(std::floor(used), static_cast<long double>(total + n));
  }
}

TEST(SpectralSchedule, LinearInterpolation) {
  EXPECT_EQ(spectral_schedule(20, 200, 3), (std::vector<int>{20, 110, 200}));
  EXPECT_EQ(spectral_schedule(200, 200, 4), (std::vector<int>{200, 200, 200, 200}));
  EXPECT_EQ(spectral_schedule(20, 200, 2), (std::vector<int>{20, 200}));
  EXPECT_EQ(spectral_schedule(20, 200, 1), (std::vector<int>{200}));
  EXPECT_THROW(spectral_schedule(201, 200, 3), ArgumentError);
}

TEST(SpectralSchedule, MonotoneAndEndsAtD) {
  for (int k1 = 1; k1 <= 30; k1 += 7)
    for (int n = 1; n <= 7; ++n) {
      const auto ks = spectral_schedule(k1, 30, n);
      EXPECT_TRUE(std::is_sorted(ks.begin(), ks.end()));
      EXPECT_EQ(ks.back(), 30);
    }
}

TEST(LrAt, BoundaryValues) {
  const LrSchedule s;  // 0.004 peak, 20 / 300 warmup, 1e-6 floor
  EXPECT_EQ(lr_at(s, 0.0), 0.0);
  EXPECT_NEAR(lr_at(s, 20.0 / 300.0), 0.004, 1e-15);
  EXPECT_NEAR(lr_at(s, 1.0), 1e-6, 1e-18);
  EXPECT_THROW(lr_at(s, -0.1), ArgumentError);
  EXPECT_THROW(lr_at(s, 1.1), ArgumentError);
}

TEST(LrAt, ContinuousOnFineGrid) {
  const LrSchedule s;
  double max_jump = 0.0;
  double prev = lr_at(s, 0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double v = lr_at(s, i * 1e-4);
    max_jump = std::max(max_jump, std::abs(v - prev));
    prev = v;
  }
  // Largest slope is the warmup ramp: peak / (20/300) per unit t, i.e. 6e-3 per 1e-4 step of peak.
  EXPECT_LE(max_jump, 1.5e-3 * s.peak_lr * (1 + 1e-9));
  // Continuity at the junction: left and right limits agree.
  const double w = 20.0 / 300.0;
  EXPECT_NEAR(lr_at(s, w - 1e-12), lr_at(s, w + 1e-12), 1e-6 * s.peak_lr);
}

TEST(LrAt, ConstantSchedule) {
  const auto s = LrSchedule::constant(0.3);
  for (double t : {0.0, 0.5, 1.0}) EXPECT_EQ(lr_at(s, t), 0.3);
}

TEST(LrSchedule, Invariants) {
  EXPECT_THROW((LrSchedule{0.1, 0, 0.2, 10}.validate()), ArgumentError);
  EXPECT_THROW((LrSchedule{0.1, 11, 0.0, 10}.validate()), ArgumentError);
}

TEST(PlanSchedule, ThreeStageExample) {
  PlanRequest r;
  r.t0 = 300;
  r.beta = 0.5;
  r.n_stages = 3;
  r.b0 = 50;
  r.d = 200;
  r.k1 = 20;
  r.b_candidates = {{25}, {38}, {50}};
  const auto p = plan_schedule(r);
  EXPECT_EQ(p.t, 150);
  ASSERT_EQ(p.stages.size(), 3u);
  // Direct evaluation of floor((T/N)(B0/B)^2) with T = 150.
  const int bs[] = {25, 38, 50}, ks[] = {20, 110, 200};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(p.stages[static_cast<std::size_t>(i)].b, bs[i]);
    EXPECT_EQ(p.stages[static_cast<std::size_t>(i)].k, ks[i]);
    const long long expected = static_cast<long long>(std::floor(50.0 * (50.0 / bs[i]) * (50.0 / bs[i])));
    EXPECT_EQ(p.stages[static_cast<std::size_t>(i)].steps, expected);
  }
  EXPECT_EQ(p.stages[1].steps, 86);
  EXPECT_DOUBLE_EQ(p.stages[0].lr_lo, 0.0);
  EXPECT_DOUBLE_EQ(p.stages[2].lr_hi, 1.0);
}

TEST(PlanSchedule, DegenerateSingleStage) {
  PlanRequest r;
  r.t0 = 300;
  r.beta = 0.999;
  r.n_stages = 1;
  r.b0 = 40;
  r.d = 200;
  r.k1 = 20;
  r.b_candidates = {{40}};
  const auto p = plan_schedule(r);
  ASSERT_EQ(p.stages.size(), 1u);
  EXPECT_EQ(p.stages[0].k, 200);
  EXPECT_EQ(p.stages[0].b, 40);
  EXPECT_EQ(p.stages[0].steps, 299);
}

TEST(PlanSchedule, Errors) {
  PlanRequest r;
  r.b0 = 50;
  r.d = 200;
  r.k1 = 20;
  r.n_stages = 3;
  r.b_candidates = {{25}, {}, {50}};
  EXPECT_THROW(plan_schedule(r), ArgumentError);
  r.b_candidates = {{25}, {38}};
  EXPECT_THROW(plan_schedule(r), ArgumentError);
  r.b_candidates = {{25}, {38}, {50}};
  r.beta = 1.0;
  EXPECT_THROW(plan_schedule(r), ArgumentError);
}

TEST(PlanSchedule, JsonRoundTrip) {
  PlanRequest r;
  r.t0 = 100;
  r.b0 = 40;
  r.d = 200;
  r.k1 = 58;
  r.b_candidates = {{20, 40}, {40}, {40}};
  r.t_ft = 2;
  r.steps_per_epoch = 80;
  const auto p = plan_schedule(r);
  const auto j = plan_to_json(p);
  for (const char* key : {"t0", "beta", "n_stages", "stages", "t_ft"}) EXPECT_TRUE(j.contains(key)) << key;
  const auto back = plan_from_json(j);
  EXPECT_EQ(plan_to_json(back), j);
  EXPECT_THROW(plan_from_json(nlohmann::json{{"t0", 1}}), FormatError);
}

TEST(OrderSearch, SingletonSkipsProxy) {
  int calls = 0;
  const auto r = order_search({25}, [&](int) { ++calls; return 0.0; });
  EXPECT_EQ(r.chosen, 25);
  EXPECT_EQ(calls, 0);
  EXPECT_FALSE(r.searched);
}

TEST(OrderSearch, TieGoesToSmaller) {
  const auto r = order_search({25, 13}, [](int) { return 0.9; });
  EXPECT_EQ(r.chosen, 13);
}

TEST(OrderSearch, ArgmaxAndOrderInvariance) {
  const auto proxy = [](int b) { return -std::abs(b - 30.0); };
  EXPECT_EQ(order_search({13, 25, 38, 50}, proxy).chosen, 25);
  EXPECT_EQ(order_search({50, 38, 13, 25}, proxy).chosen, 25);
}

TEST(OrderSearch, FailuresSkippedAndAllFailing) {
  const auto partly = [](int b) -> double {
    if (b == 50) throw NumericError("diverged");
    return b == 25 ? std::numeric_limits<double>::quiet_NaN() : 0.5;
  };
  EXPECT_EQ(order_search({13, 25, 50}, partly).chosen, 13);
  EXPECT_THROW(order_search({13, 25}, [](int) -> double { throw NumericError("x"); }), SearchError);
  EXPECT_THROW(order_search({}, [](int) { return 0.0; }), ArgumentError);
}
