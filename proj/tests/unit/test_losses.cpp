#include <gtest/gtest.h>

#include <cmath>

#include "ivcert/error.hpp"
#include "ivcert/layers.hpp"
#include "ivcert/losses.hpp"
#include "ivcert/rng.hpp"

using namespace ivcert;

namespace {

const double kE = std::exp(1.0);

IntervalTensor logits(std::vector<double> lo, std::vector<double> hi) {
  const std::size_t m = lo.size();
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), {1, m});
}

double point_logsoftmax(const std::vector<double>& z, int c) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return z[c] - mx - std::log(s);
}

// Dense grid search of logsoftmax_c over a 2-logit box.
Interval grid_logsoftmax(Interval zc, Interval zo, int n = 400) {
  Interval out{INFINITY, -INFINITY};
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double a = zc.lower + (zc.upper - zc.lower) * i / n;
      const double b = zo.lower + (zo.upper - zo.lower) * j / n;
      const double v = point_logsoftmax({a, b}, 0);
      out.lower = std::min(out.lower, v);
      out.upper = std::max(out.upper, v);
    }
  }
  return out;
}

// Min/max of f over every corner of the box.
template <typename F>
Interval corner_range(const std::vector<Interval>& box, F f) {
  Interval out{INFINITY, -INFINITY};
  const std::size_t m = box.size();
  std::vector<double> z(m);
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    for (std::size_t i = 0; i < m; ++i) z[i] = (mask >> i) & 1 ? box[i].upper : box[i].lower;
    const double v = f(z);
    out.lower = std::min(out.lower, v);
    out.upper = std::max(out.upper, v);
  }
  return out;
}

}  // namespace

TEST(LogSoftmax, Examples) {
  const int c0[] = {0};
  auto p = logsoftmax_interval(logits({0, 0}, {0, 0}), c0)[0];
  EXPECT_NEAR(p.lower, std::log(0.5), 1e-15);
  EXPECT_NEAR(p.upper, std::log(0.5), 1e-15);

  auto s = logsoftmax_interval(logits({0, -1000}, {0, -1000}), c0)[0];
  EXPECT_NEAR(s.lower, 0.0, 1e-300);
  EXPECT_NEAR(s.upper, 0.0, 1e-300);

  auto b = logsoftmax_interval(logits({0, 0}, {1, 1}), c0)[0];
  EXPECT_NEAR(b.lower, -std::log(1.0 + kE), 1e-12);
  EXPECT_NEAR(b.upper, -std::log(1.0 + 1.0 / kE), 1e-12);
  const Interval g = grid_logsoftmax({0, 1}, {0, 1});
  EXPECT_NEAR(b.lower, g.lower, 1e-12);
  EXPECT_NEAR(b.upper, g.upper, 1e-12);
  EXPECT_NEAR(b.lower, -1.3133, 1e-4);
  EXPECT_NEAR(b.upper, -0.3133, 1e-4);
}

TEST(LogSoftmax, RequiresTwoLogits) {
  const int c0[] = {0};
  EXPECT_THROW(logsoftmax_interval(logits({0}, {1}), c0), Error);
  const int c5[] = {5};
  EXPECT_THROW(logsoftmax_interval(logits({0, 0}, {1, 1}), c5), Error);
}

TEST(Softmax, Examples) {
  const int c0[] = {0};
  auto p = softmax_interval(logits({0, 0}, {0, 0}), c0)[0];
  EXPECT_DOUBLE_EQ(p.lower, 0.5);
  EXPECT_DOUBLE_EQ(p.upper, 0.5);
  auto s = softmax_interval(logits({10, -10}, {10, -10}), c0)[0];
  EXPECT_NEAR(s.lower, 1.0, 1e-8);
  EXPECT_NEAR(s.upper, 1.0, 1e-8);
  auto b = softmax_interval(logits({0, 0}, {1, 1}), c0)[0];
  EXPECT_NEAR(b.lower, 1.0 / (1.0 + kE), 1e-12);
  EXPECT_NEAR(b.upper, kE / (kE + 1.0), 1e-12);
  const Interval g = grid_logsoftmax({0, 1}, {0, 1});
  EXPECT_NEAR(b.lower, std::exp(g.lower), 1e-12);
  EXPECT_NEAR(b.upper, std::exp(g.upper), 1e-12);
}

TEST(CrossEntropy, Examples) {
  const int c0[] = {0};
  auto p = ce_loss_interval(logits({0, 0}, {0, 0}), c0)[0];
  EXPECT_NEAR(p.lower, std::log(2.0), 1e-15);
  EXPECT_NEAR(p.upper, std::log(2.0), 1e-15);
  auto s = ce_loss_interval(logits({1000, -1000}, {1000, -1000}), c0)[0];
  EXPECT_NEAR(s.lower, 0.0, 1e-300);
  EXPECT_NEAR(s.upper, 0.0, 1e-300);
  auto b = ce_loss_interval(logits({0, 0}, {1, 1}), c0)[0];
  EXPECT_NEAR(b.lower, 0.3133, 1e-4);
  EXPECT_NEAR(b.upper, 1.3133, 1e-4);
}

TEST(CrossEntropy, GradExamples) {
  const int c0[] = {0};
  auto p = ce_grad_interval(logits({0, 0}, {0, 0}), c0);
  EXPECT_DOUBLE_EQ(p[0].lower, -0.5);
  EXPECT_DOUBLE_EQ(p[0].upper, -0.5);
  EXPECT_DOUBLE_EQ(p[1].lower, 0.5);
  EXPECT_DOUBLE_EQ(p[1].upper, 0.5);
  auto s = ce_grad_interval(logits({1000, -1000}, {1000, -1000}), c0);
  EXPECT_NEAR(s[0].lower, 0.0, 1e-15);
  EXPECT_NEAR(s[1].upper, 0.0, 1e-15);
  auto b = ce_grad_interval(logits({0, 0}, {1, 1}), c0);
  EXPECT_NEAR(b[0].lower, 1.0 / (1.0 + kE) - 1.0, 1e-12);
  EXPECT_NEAR(b[0].upper, kE / (kE + 1.0) - 1.0, 1e-12);
  EXPECT_NEAR(b[0].lower, -0.7311, 1e-4);
  EXPECT_NEAR(b[0].upper, -0.2689, 1e-4);
}

TEST(OneHot, LabelsFromOneHot) {
  EXPECT_EQ(labels_from_one_hot({{1, 0}, {0, 1}}), (std::vector<int>{0, 1}));
  EXPECT_THROW(labels_from_one_hot({{1, 1}}), DomainError);
  EXPECT_THROW(labels_from_one_hot({{0.5, 0.5}}), DomainError);
  EXPECT_THROW(labels_from_one_hot({{0, 0}}), DomainError);
}

TEST(Bce, Examples) {
  const int y1[] = {1};
  auto p = bce_loss_interval(logits({0}, {0}), y1)[0];
  EXPECT_NEAR(p.lower, std::log(2.0), 1e-15);
  EXPECT_NEAR(p.upper, std::log(2.0), 1e-15);
  auto s = bce_loss_interval(logits({1000}, {1000}), y1)[0];
  EXPECT_NEAR(s.lower, 0.0, 1e-300);
  EXPECT_NEAR(s.upper, 0.0, 1e-300);
  auto b = bce_loss_interval(logits({-1}, {1}), y1)[0];
  EXPECT_NEAR(b.lower, std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(b.upper, std::log1p(std::exp(1.0)), 1e-12);
  EXPECT_NEAR(b.lower, 0.3133, 1e-4);
  EXPECT_NEAR(b.upper, 1.3133, 1e-4);
}

TEST(Bce, GradExamples) {
  const int y1[] = {1}, y0[] = {0};
  EXPECT_DOUBLE_EQ(bce_grad_interval(logits({0}, {0}), y1)[0].lower, -0.5);
  EXPECT_DOUBLE_EQ(bce_grad_interval(logits({0}, {0}), y0)[0].upper, 0.5);
  auto b = bce_grad_interval(logits({-1}, {1}), y1)[0];
  EXPECT_NEAR(b.lower, stable_sigmoid(-1.0) - 1.0, 1e-15);
  EXPECT_NEAR(b.upper, stable_sigmoid(1.0) - 1.0, 1e-15);
  EXPECT_NEAR(b.lower, -0.7311, 1e-4);
  EXPECT_NEAR(b.upper, -0.2689, 1e-4);
}

TEST(Bce, RejectsBadLabels) {
  const int y2[] = {2};
  EXPECT_THROW(bce_loss_interval(logits({0}, {0}), y2), DomainError);
  EXPECT_THROW(bce_grad_interval(logits({0}, {0}), y2), DomainError);
  const int y1[] = {1};
  EXPECT_THROW(bce_loss_interval(logits({0, 0}, {0, 0}), y1), Error);
}

TEST(Losses, SoundBySampling) {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 2 + rng.below(3);
    std::vector<double> lo(m), hi(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double c = rng.uniform(-5, 5), r = rng.uniform(0, 3);
      lo[i] = c - r;
      hi[i] = c + r;
    }
    const int cls[] = {static_cast<int>(rng.below(m))};
    const auto z = logits(lo, hi);
    const auto ls = logsoftmax_interval(z, cls)[0];
    const auto grad = ce_grad_interval(z, cls);
    const int y[] = {static_cast<int>(rng.below(2))};
    const auto z1 = logits({lo[0]}, {hi[0]});
    const auto bl = bce_loss_interval(z1, y)[0];
    const auto bg = bce_grad_interval(z1, y)[0];
    for (int k = 0; k < 1000; ++k) {
      std::vector<double> v(m);
      for (std::size_t i = 0; i < m; ++i) v[i] = rng.uniform(lo[i], hi[i]);
      ASSERT_TRUE(ls.contains(point_logsoftmax(v, cls[0]), 1e-12));
      for (std::size_t i = 0; i < m; ++i) {
        const double g = std::exp(point_logsoftmax(v, static_cast<int>(i))) - (static_cast<int>(i) == cls[0]);
        ASSERT_TRUE(grad[i].contains(g, 1e-12));
      }
      ASSERT_TRUE(bl.contains(bce_with_logits(v[0], y[0]), 1e-12));
      ASSERT_TRUE(bg.contains(stable_sigmoid(v[0]) - y[0], 1e-12));
    }
  }
}

TEST(Losses, TightAtCorners) {
  Rng rng(37);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 2 + rng.below(3);
    std::vector<double> lo(m), hi(m);
    std::vector<Interval> box(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double c = rng.uniform(-5, 5), r = rng.uniform(0, 3);
      lo[i] = c - r;
      hi[i] = c + r;
      box[i] = {lo[i], hi[i]};
    }
    const int c = static_cast<int>(rng.below(m));
    const int cls[] = {c};
    const auto ls = logsoftmax_interval(logits(lo, hi), cls)[0];
    const auto want = corner_range(box, [&](const std::vector<double>& z) { return point_logsoftmax(z, c); });
    EXPECT_NEAR(ls.lower, want.lower, 1e-6);
    EXPECT_NEAR(ls.upper, want.upper, 1e-6);
    const auto sm = softmax_interval(logits(lo, hi), cls)[0];
    EXPECT_NEAR(sm.lower, std::exp(want.lower), 1e-6);
    EXPECT_NEAR(sm.upper, std::exp(want.upper), 1e-6);

    const int y[] = {static_cast<int>(rng.below(2))};
    const auto bl = bce_loss_interval(logits({lo[0]}, {hi[0]}), y)[0];
    const auto bwant = corner_range({box[0]}, [&](const std::vector<double>& z) { return bce_with_logits(z[0], y[0]); });
    EXPECT_NEAR(bl.lower, bwant.lower, 1e-6);
    EXPECT_NEAR(bl.upper, bwant.upper, 1e-6);
  }
}

TEST(Losses, StableForLargeLogits) {
  Rng rng(41);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t m = 2 + rng.below(3);
    std::vector<double> lo(m), hi(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double c = rng.uniform(-1000, 1000), r = rng.uniform(0, 1000);
      lo[i] = c - r;
      hi[i] = c + r;
    }
    const int cls[] = {static_cast<int>(rng.below(m))};
    const auto z = logits(lo, hi);
    const int y[] = {static_cast<int>(rng.below(2))};
    const auto z1 = logits({lo[0]}, {hi[0]});
    for (const auto& out : {logsoftmax_interval(z, cls), softmax_interval(z, cls), ce_loss_interval(z, cls),
                            ce_grad_interval(z, cls), bce_loss_interval(z1, y), bce_grad_interval(z1, y)}) {
      ASSERT_TRUE(out.all_finite());
    }
  }
}

TEST(Losses, DegenerateMatchesPointValues) {
  Rng rng(43);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> z{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
    const int cls[] = {static_cast<int>(rng.below(3))};
    const auto ls = logsoftmax_interval(logits(z, z), cls)[0];
    EXPECT_NEAR(ls.lower, point_logsoftmax(z, cls[0]), 1e-13 * std::max(1.0, std::abs(ls.lower)));
    EXPECT_NEAR(ls.upper, point_logsoftmax(z, cls[0]), 1e-13 * std::max(1.0, std::abs(ls.lower)));
    const int y[] = {static_cast<int>(rng.below(2))};
    const auto bl = bce_loss_interval(logits({z[0]}, {z[0]}), y)[0];
    EXPECT_DOUBLE_EQ(bl.lower, bce_with_logits(z[0], y[0]));
    EXPECT_DOUBLE_EQ(bl.upper, bce_with_logits(z[0], y[0]));
  }
}

TEST(Losses, DispatchAndMean) {
  const int y[] = {1, 0};
  const auto z = IntervalTensor::from_bounds({-1, 0}, {1, 0}, {2, 1});
  const auto per = loss_interval(LossKind::kBinaryCrossEntropy, z, y);
  EXPECT_EQ(per.shape(), (Shape{2, 1}));
  const Interval m = mean_loss(per);
  EXPECT_NEAR(m.lower, 0.5 * (std::log1p(std::exp(-1.0)) + std::log(2.0)), 1e-15);
  EXPECT_EQ(loss_grad_interval(LossKind::kBinaryCrossEntropy, z, y).shape(), z.shape());
  EXPECT_EQ(output_width(LossKind::kBinaryCrossEntropy, 2), 1u);
  EXPECT_EQ(output_width(LossKind::kCrossEntropy, 3), 3u);
  EXPECT_EQ(loss_from_string("bce"), LossKind::kBinaryCrossEntropy);
  EXPECT_EQ(loss_from_string(to_string(LossKind::kCrossEntropy)), LossKind::kCrossEntropy);
}
