#include <gtest/gtest.h>

#include "ivcert/concrete.hpp"
#include "ivcert/error.hpp"
#include "ivcert/oracle.hpp"
#include "ivcert/rng.hpp"

using namespace ivcert;

namespace {

TrainConfig replay_config() {
  TrainConfig c;
  c.learning_rate = 0.05;
  c.batch_size = 25;
  c.max_epochs = 8;
  c.hidden_sizes = {6};
  c.seed = 21;
  return c;
}

const Dataset& moons() {
  static const Dataset d = gen_two_moons(100, 0.1, 8);
  return d;
}

TrainTrace trace_for(double eps) {
  const TrainConfig c = replay_config();
  return train_certified(init_point_model(make_architecture(c, 2, 2), 1), {moons(), eps, eps}, c).trace;
}

}  // namespace

TEST(ExactHull, Examples) {
  const auto a = IntervalTensor::from_bounds({-1, 2}, {1, 3}, {1, 2});
  const auto b = IntervalTensor::from_bounds({2, -1}, {3, 1}, {2, 1});
  // [-1,1]*[2,3] + [2,3]*[-1,1] = [-3,3] + [-3,3]
  const auto h = exact_matmul_hull(a, b);
  EXPECT_EQ(h.at(0, 0), (Interval{-6, 6}));
  const auto p = exact_matmul_hull(IntervalTensor::from_point({1, 2}, {1, 2}),
                                   IntervalTensor::from_point({3, 4}, {2, 1}));
  EXPECT_EQ(p.at(0, 0), (Interval{11, 11}));
  EXPECT_THROW(exact_matmul_hull(a, a), ShapeError);
}

TEST(ContainmentMargin, RelativeScale) {
  EXPECT_LT(containment_margin({0, 1}, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(containment_margin({0, 1}, 1.5), 0.5);
  EXPECT_DOUBLE_EQ(containment_margin({100, 200}, 202), 0.01);
  EXPECT_EQ(containment_margin({0, 1}, NAN), INFINITY);
}

TEST(Replay, ZeroEpsPassesTrivially) {
  ReplayOptions o;
  o.samples = 3;
  const auto r = replay_containment(trace_for(0.0), {moons(), 0.0, 0.0}, replay_config(), o);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.steps, 32u);
  EXPECT_GT(r.checks, 0u);
}

TEST(Replay, CertifiedRunContainsConcreteRuns) {
  const Dataset probe = gen_two_moons(40, 0.1, 9);
  ReplayOptions o;
  o.samples = 10;
  o.probe = &probe;
  const auto r = replay_containment(trace_for(1e-2), {moons(), 1e-2, 1e-2}, replay_config(), o);
  EXPECT_TRUE(r.trace_consistent);
  EXPECT_EQ(r.violations, 0u) << (r.first_violation ? r.first_violation->quantity : "");
  EXPECT_EQ(r.samples, 10u);
  EXPECT_LE(r.worst_margin, 1e-7);
}

TEST(Replay, FaultInjectionIsDetected) {
  ReplayOptions o;
  o.samples = 5;
  o.corrupt_step = 3;
  const auto r = replay_containment(trace_for(1e-2), {moons(), 1e-2, 1e-2}, replay_config(), o);
  EXPECT_FALSE(r.passed());
  EXPECT_GT(r.violations, 0u);
  ASSERT_TRUE(r.first_violation.has_value());
  EXPECT_GE(r.first_violation->step, 3u);
}

TEST(Replay, TamperedTraceIsInconsistent) {
  TrainTrace t = trace_for(1e-3);
  t.steps[4].max_radius *= 2;
  ReplayOptions o;
  o.samples = 1;
  EXPECT_FALSE(replay_containment(t, {moons(), 1e-3, 1e-3}, replay_config(), o).trace_consistent);
}

TEST(FiniteDiff, SingleNeuronBce) {
  PointModel m;
  m.layers.push_back(PointLinear{1, 1, {0.7}, {-0.2}});
  Dataset batch;
  batch.num_features = 1;
  batch.features = {0.5, -1.5, 2.0};
  batch.labels = {1, 0, 1};
  const auto r = finite_diff_check(m, batch);
  EXPECT_EQ(r.checked, 2u);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(FiniteDiff, MlpBothHeads) {
  const Dataset batch = gen_two_moons(20, 0.1, 4);
  for (ActivationKind act : {ActivationKind::kRelu, ActivationKind::kSigmoid}) {
    for (LossKind loss : {LossKind::kBinaryCrossEntropy, LossKind::kCrossEntropy}) {
      Architecture a;
      a.input_size = 2;
      a.hidden_sizes = {8};
      a.output_size = loss == LossKind::kCrossEntropy ? 2 : 1;
      a.activation = act;
      a.loss = loss;
      const auto r = finite_diff_check(init_point_model(a, 5), batch);
      EXPECT_LT(r.max_rel_error, 1e-4) << to_string(act) << " " << to_string(loss);
      EXPECT_GT(r.checked, r.skipped);
    }
  }
}

TEST(EngineGradients, MatchConcreteGradients) {
  Architecture a;
  a.input_size = 2;
  a.hidden_sizes = {4, 3};
  a.output_size = 3;
  a.loss = LossKind::kCrossEntropy;
  const PointModel m = init_point_model(a, 6);
  Dataset batch = gen_two_moons(10, 0.1, 2);
  batch.labels[0] = 2;
  const auto g = engine_gradients(m, batch);
  const auto c = concrete_gradients(m, batch.features, batch.labels).flat;
  ASSERT_EQ(g.size(), c.size());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], c[i], 1e-12);
}
