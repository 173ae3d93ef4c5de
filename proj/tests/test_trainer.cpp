#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "spectrain/errors.hpp"
#include "spectrain/rng.hpp"
#include "spectrain/trainer.hpp"

using namespace spectrain;

namespace {

LabeledCube small_scene(std::uint64_t seed, std::size_t side = 16, std::size_t bands = 20) {
  SyntheticOptions o;
  o.height = side;
  o.width = side;
  o.bands = bands;
  o.seed = seed;
  return generate_synthetic(o);
}

Matrix random_batch(std::size_t m, std::size_t k, CounterRng& r) {
  Matrix x(m, k);
  for (double& v : x.data()) v = r.normal();
  return x;
}

TrainConfig gd_config(const TrainingData& data, int epochs, std::uint64_t seed = 0) {
  TrainConfig c;
  c.seed = seed;
  c.lr = convex_lr_schedule(data.smoothness(), epochs);
  return c;
}

}  // namespace

TEST(Parse, BackboneAndOptimizer) {
  EXPECT_EQ(parse_backbone("ridge"), Backbone::ridge);
  EXPECT_EQ(parse_backbone("logistic"), Backbone::logistic);
  EXPECT_EQ(to_string(parse_optimizer("sgd")), "sgd");
  EXPECT_THROW(parse_backbone("mlp"), ArgumentError);
  EXPECT_THROW(parse_optimizer("adam"), ArgumentError);
}

TEST(LossAndGrad, RidgeZeroModel) {
  const Matrix x(3, 2, 1.0);
  const std::vector<double> y{1.0, 2.0, 3.0};
  ConvexModel m{Backbone::ridge, {0.0, 0.0}, 0.0, 0.5};
  const auto lg = loss_and_grad(m, x, y);
  EXPECT_DOUBLE_EQ(lg.loss, (0.5 * (1 + 4 + 9)) / 3.0);
  EXPECT_DOUBLE_EQ(lg.grad[0], -2.0);
  EXPECT_DOUBLE_EQ(lg.grad[1], -2.0);
  EXPECT_DOUBLE_EQ(lg.grad[2], -2.0);
}

TEST(LossAndGrad, LogisticZeroModelIsLn2) {
  CounterRng r(1, 1);
  const Matrix x = random_batch(7, 3, r);
  const std::vector<double> y{0, 1, 1, 0, 1, 0, 0};
  ConvexModel m{Backbone::logistic, {0.0, 0.0, 0.0}, 0.0, 0.3};
  EXPECT_NEAR(loss_and_grad(m, x, y).loss, std::log(2.0), 1e-15);
}

TEST(LossAndGrad, MatchesFiniteDifferences) {
  CounterRng r(2, 2);
  for (Backbone kind : {Backbone::ridge, Backbone::logistic}) {
    const Matrix x = random_batch(9, 4, r);
    std::vector<double> y(9);
    for (double& v : y) v = r.below(2) ? 1.0 : 0.0;
    ConvexModel m{kind, {r.normal(), r.normal(), r.normal(), r.normal()}, r.normal(), 0.2};
    const auto lg = loss_and_grad(m, x, y);
    const double h = 1e-6;
    for (std::size_t j = 0; j <= 4; ++j) {
      ConvexModel p = m, q = m;
      double& pv = j < 4 ? p.w[j] : p.bias;
      double& qv = j < 4 ? q.w[j] : q.bias;
      pv += h;
      qv -= h;
      const double fd = (loss_and_grad(p, x, y).loss - loss_and_grad(q, x, y).loss) / (2 * h);
      EXPECT_NEAR(lg.grad[j], fd, 1e-7 * (1 + std::abs(fd))) << to_string(kind) << " " << j;
    }
  }
}

TEST(LossAndGrad, ShapeErrors) {
  const Matrix x(2, 3, 1.0);
  ConvexModel m{Backbone::ridge, {0.0, 0.0}, 0.0, 0.1};
  EXPECT_THROW(loss_and_grad(m, x, std::vector<double>{1, 2}), ArgumentError);
  m.w.push_back(0.0);
  EXPECT_THROW(loss_and_grad(m, x, std::vector<double>{1}), ArgumentError);
}

TEST(SgdStep, ZeroLearningRateIsNoop) {
  CounterRng r(3, 3);
  const Matrix x = random_batch(5, 2, r);
  const std::vector<double> y{1, 0, 1, 1, 0};
  ConvexModel m{Backbone::ridge, {0.3, -0.2}, 0.1, 0.1};
  const ConvexModel before = m;
  sgd_step(m, x, y, 0.0);
  EXPECT_EQ(m.w, before.w);
  EXPECT_EQ(m.bias, before.bias);
}

TEST(SgdStep, OneDimensionalQuadraticContraction) {
  // x = +-1 with zero targets: the weight gradient is (1 + ridge) w and the
  // bias gradient is b, so each step multiplies them by fixed factors.
  const Matrix x(2, 1, std::vector<double>{1.0, -1.0});
  const std::vector<double> y{0.0, 0.0};
  ConvexModel m{Backbone::ridge, {1.0}, 1.0, 0.25};
  const double lr = 0.4;
  for (int t = 1; t <= 10; ++t) {
    sgd_step(m, x, y, lr);
    EXPECT_NEAR(m.w[0], std::pow(1 - lr * 1.25, t), 1e-14);
    EXPECT_NEAR(m.bias, std::pow(1 - lr, t), 1e-14);
  }
}

TEST(SgdStep, NonFiniteGradientThrows) {
  const Matrix x(1, 1, std::vector<double>{std::numeric_limits<double>::infinity()});
  ConvexModel m{Backbone::ridge, {1.0}, 0.0, 0.0};
  EXPECT_THROW(sgd_step(m, x, std::vector<double>{0.0}, 0.1), NumericError);
}

TEST(SgdStep, SingleSampleGradientsAverageToFullGradient) {
  CounterRng r(4, 4);
  const Matrix x = random_batch(12, 3, r);
  std::vector<double> y(12);
  for (double& v : y) v = r.normal();
  const ConvexModel m{Backbone::ridge, {0.5, -1.0, 0.25}, 0.2, 0.3};
  const auto full = loss_and_grad(m, x, y);
  std::vector<double> avg(4, 0.0);
  for (std::size_t i = 0; i < 12; ++i) {
    const Matrix xi(1, 3, std::vector<double>(x.row(i).begin(), x.row(i).end()));
    const auto g = loss_and_grad(m, xi, std::vector<double>{y[i]});
    for (std::size_t j = 0; j < 4; ++j) avg[j] += g.grad[j] / 12.0;
  }
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(avg[j], full.grad[j], 1e-12);
}

TEST(ExpandWeights, ZeroExtension) {
  const std::vector<double> w{1.0, 2.0};
  EXPECT_EQ(expand_weights(w, 2), w);
  EXPECT_EQ(expand_weights(w, 4), (std::vector<double>{1.0, 2.0, 0.0, 0.0}));
  EXPECT_THROW(expand_weights(w, 1), ArgumentError);
}

TEST(ExpandWeights, PredictionsUnchanged) {
  const TrainingData data(small_scene(5), {});
  ConvexModel m = data.zero_model(3);
  m.w = {0.1, -0.2, 0.3};
  m.bias = 0.4;
  const double loss = data.full_loss(m), acc = data.validation_accuracy(m);
  expand_model(m, data.bands());
  EXPECT_NEAR(data.full_loss(m), loss, 1e-12 * (1 + loss));
  EXPECT_EQ(data.validation_accuracy(m), acc);
}

TEST(TrainingData, SplitAndOptimum) {
  const TrainingData data(small_scene(6), {});
  EXPECT_EQ(data.train_count() + data.validation_indices().size(), 256u);
  EXPECT_GT(data.smoothness(), data.strong_convexity());
  EXPECT_GT(data.strong_convexity(), 0.0);
  ConvexModel best = data.zero_model(data.bands());
  std::copy_n(data.optimum().begin(), data.bands(), best.w.begin());
  best.bias = data.optimum().back();
  EXPECT_NEAR(data.loss_gap(best), 0.0, 1e-14);
  const auto native = data.stage_data(data.bands(), data.side());
  const auto g = loss_and_grad(best, native.x, native.y);
  for (double v : g.grad) EXPECT_NEAR(v, 0.0, 1e-10);
  EXPECT_NEAR(data.full_loss(best), data.optimal_loss(), 1e-12);
}

TEST(TrainingData, RejectsUnsupportedScenes) {
  SyntheticOptions o;
  o.height = 8;
  o.width = 8;
  o.bands = 6;
  o.classes = 3;
  EXPECT_THROW(TrainingData(generate_synthetic(o), {}), ArgumentError);
  o.classes = 2;
  o.width = 10;
  EXPECT_THROW(TrainingData(generate_synthetic(o), {}), ArgumentError);
}

TEST(TrainingData, StageViewAtReducedResolution) {
  const TrainingData data(small_scene(7), {});
  const auto s = data.stage_data(4, 8);
  EXPECT_EQ(s.x.cols(), 4u);
  EXPECT_GT(s.x.rows(), 0u);
  EXPECT_LE(s.x.rows(), 64u);
  EXPECT_THROW(data.stage_data(4, 17), ArgumentError);
  EXPECT_THROW(data.stage_data(0, 8), ArgumentError);
}

TEST(FineTune, ZeroEpochsLeavesModel) {
  const TrainingData data(small_scene(8), {});
  const auto stage = data.stage_data(5, data.side());
  ConvexModel m = data.zero_model(2);
  m.w = {0.3, 0.1};
  EXPECT_EQ(fine_tune(m, stage, 0, 0.1, gd_config(data, 1), 1), 0);
  EXPECT_EQ(m.w, (std::vector<double>{0.3, 0.1, 0.0, 0.0, 0.0}));
}

TEST(FineTune, DecreasesLossAndKeepsAccuracyInRange) {
  const TrainingData data(small_scene(9), {});
  const auto stage = data.stage_data(data.bands(), data.side());
  ConvexModel m = data.zero_model(0);
  const double before = data.full_loss(m);
  const auto cfg = gd_config(data, 5);
  EXPECT_EQ(fine_tune(m, stage, 5, 1.0 / data.smoothness(), cfg, 1), 5);
  EXPECT_LT(data.full_loss(m), before);
  const double acc = data.validation_accuracy(m);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST(Baseline, ZeroEpochsEmptyTrace) {
  const TrainingData data(small_scene(10), {});
  const auto t = run_baseline(data, 0, gd_config(data, 1));
  EXPECT_TRUE(t.records.empty());
  EXPECT_FALSE(cost_to_gap(t, 1e-3).has_value());
}

TEST(Baseline, GapFollowsGradientDescentBound) {
  const TrainingData data(small_scene(11), {});
  const double gap0 = data.loss_gap(data.zero_model(0));
  const auto t = run_baseline(data, 60, gd_config(data, 60));
  ASSERT_EQ(t.records.size(), 60u);
  const double q = 1.0 - data.strong_convexity() / data.smoothness();
  double prev_cost = 0.0;
  for (const auto& rec : t.records) {
    EXPECT_LE(rec.loss_gap, gap0 * std::pow(q, static_cast<double>(rec.step)) * (1 + 1e-9) + 1e-15);
    EXPECT_GT(rec.sim_cost, prev_cost);
    prev_cost = rec.sim_cost;
  }
}

TEST(SpectralTrain, SingleStagePlanEqualsBaseline) {
  const TrainingData data(small_scene(12), {});
  const auto cfg = gd_config(data, 40);
  PlanRequest r;
  r.t0 = 41;
  r.beta = 0.999;
  r.n_stages = 1;
  r.b0 = static_cast<int>(data.side());
  r.d = static_cast<int>(data.bands());
  r.k1 = 3;
  r.b_candidates = {{r.b0}};
  const auto plan = plan_schedule(r);
  ASSERT_EQ(plan.stages[0].steps, 40);
  const auto a = run_spectral_train(plan, data, cfg);
  const auto b = run_baseline(data, 40, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].loss_gap, b.records[i].loss_gap);
    EXPECT_EQ(a.records[i].sim_cost, b.records[i].sim_cost);
  }
  EXPECT_EQ(a.final_accuracy, b.final_accuracy);
}

TEST(SpectralTrain, DeterministicTrace) {
  const TrainingData data(small_scene(13), {});
  TrainConfig cfg = gd_config(data, 30, 13);
  cfg.optimizer = Optimizer::sgd;
  cfg.batch_size = 8;
  const auto plan = default_plan(data, cfg, 6);
  std::ostringstream a, b;
  write_trace_csv(run_spectral_train(plan, data, cfg), a, false);
  write_trace_csv(run_spectral_train(plan, data, cfg), b, false);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
}

TEST(SpectralTrain, PlanMismatchNamesField) {
  const TrainingData data(small_scene(14), {});
  const auto cfg = gd_config(data, 10);
  auto plan = default_plan(data, cfg, 10);
  plan.d += 1;
  try {
    run_spectral_train(plan, data, cfg);
    FAIL() << "expected ArgumentError";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("field d"), std::string::npos);
  }
}

TEST(SpectralTrain, OrderSearchPrefersNativeOnThinStripes) {
  // Stripes two pixels wide alias away at roughly half resolution, so the
  // proxy should favor the native size.
  SyntheticOptions o;
  o.height = 25;
  o.width = 25;
  o.bands = 30;
  o.seed = 3;
  o.stripe_width = 2;
  DataOptions dopt;
  dopt.seed = 3;
  const TrainingData data(generate_synthetic(o), dopt);
  const auto cfg = gd_config(data, 100, 3);
  PlanRequest r;
  r.t0 = 100;
  r.b0 = 25;
  r.d = 30;
  r.k1 = static_cast<int>(select_k(data.basis(), 0.95));
  r.b_candidates = {{13, 25}, {25}, {25}};
  r.t_ft = 2;
  const auto trace = run_spectral_train(plan_schedule(r), data, cfg);
  ASSERT_EQ(trace.choices.size(), 1u);
  EXPECT_EQ(trace.choices[0].chosen_b, 25);
  EXPECT_GT(trace.proxy_cost, 0.0);
  EXPECT_GT(trace.choices[0].proxy_scores[1], trace.choices[0].proxy_scores[0]);
}

TEST(TraceCsv, RoundTrip) {
  const TrainingData data(small_scene(15), {});
  const auto t = run_baseline(data, 7, gd_config(data, 7));
  std::stringstream ss;
  write_trace_csv(t, ss);
  const auto back = read_trace_csv(ss);
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    EXPECT_EQ(back.records[i].step, t.records[i].step);
    EXPECT_EQ(back.records[i].k, t.records[i].k);
    EXPECT_EQ(back.records[i].loss_gap, t.records[i].loss_gap);
    EXPECT_EQ(back.records[i].sim_cost, t.records[i].sim_cost);
  }
  std::istringstream bad("step,stage\n1,x\n");
  EXPECT_THROW(read_trace_csv(bad), FormatError);
}

TEST(CostToGap, FirstCrossing) {
  TrainTrace t;
  t.records = {{1, 1, 2, 4, 0, 0.5, 1.0, 0}, {2, 1, 2, 4, 0, 0.05, 2.0, 0}, {3, 2, 4, 4, 0, 0.01, 4.0, 0}};
  EXPECT_EQ(cost_to_gap(t, 0.1).value(), 2.0);
  EXPECT_EQ(steps_to_gap(t, 0.01).value(), 3);
  EXPECT_FALSE(cost_to_gap(t, 0.001).has_value());
}

TEST(SgdStep, QuadraticSolvedInOneStepAtInverseCurvature) {
  // Single sample x = 2, y = 0, no bias movement: loss 0.5 (2w + b)^2, so
  // with b = 0 the weight curvature is L = 4 and lr = 1/L lands on w = 0.
  const Matrix x(1, 1, std::vector<double>{2.0});
  ConvexModel m{Backbone::ridge, {3.0}, 0.0, 0.0};
  const auto g = loss_and_grad(m, x, std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(g.grad[0], 12.0);
  m.w[0] -= g.grad[0] / 4.0;
  EXPECT_EQ(m.w[0], 0.0);
}

TEST(ExpandWeights, GradientStepAfterExpansionDecreasesLoss) {
  const TrainingData data(small_scene(16), {});
  const auto low = data.stage_data(3, data.side());
  ConvexModel m = data.zero_model(0);
  fine_tune(m, low, 30, 1.0 / data.smoothness(), gd_config(data, 30), 1);
  expand_model(m, data.bands());
  const double before = data.full_loss(m);
  const auto full = data.stage_data(data.bands(), data.side());
  sgd_step(m, full.x, full.y, 1.0 / data.smoothness());
  EXPECT_LT(data.full_loss(m), before);
}

TEST(Baseline, ReachesGapWithinConditionNumberBound) {
  const TrainingData data(small_scene(17), {});
  const double kappa = data.smoothness() / data.strong_convexity();
  const double gap0 = data.loss_gap(data.zero_model(0));
  const double bound = kappa * std::log(gap0 / 1e-6);
  const int epochs = static_cast<int>(std::ceil(bound)) + 1;
  const auto t = run_baseline(data, epochs, gd_config(data, epochs));
  const auto steps = steps_to_gap(t, 1e-6);
  ASSERT_TRUE(steps.has_value());
  EXPECT_LE(static_cast<double>(*steps), bound);
}
