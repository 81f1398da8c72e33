#include <gtest/gtest.h>

#include <cmath>

#include "ivcert/error.hpp"
#include "ivcert/layers.hpp"
#include "ivcert/rng.hpp"

using namespace ivcert;

namespace {

IntervalTensor iv(double lo, double hi) { return IntervalTensor::from_bounds({lo}, {hi}, {1, 1}); }

IntervalTensor random_box(Rng& rng, Shape shape, double span, double max_radius) {
  const std::size_t n = shape_size(shape);
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = rng.uniform(-span, span);
    const double r = rng.uniform(0.0, max_radius);
    lo[i] = m - r;
    hi[i] = m + r;
  }
  return IntervalTensor::from_bounds(lo, hi, shape);
}

std::vector<double> sample_inside(Rng& rng, const IntervalTensor& t) {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(t.lower()[i], t.upper()[i]);
  return v;
}

void expect_near(Interval got, Interval want) {
  EXPECT_NEAR(got.lower, want.lower, 1e-14);
  EXPECT_NEAR(got.upper, want.upper, 1e-14);
  EXPECT_LE(got.lower, want.lower);
  EXPECT_GE(got.upper, want.upper);
}

bool inside(const IntervalTensor& t, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double tol = 1e-9 * std::max({1.0, std::abs(t.lower()[i]), std::abs(t.upper()[i])});
    if (!(t.lower()[i] - tol <= v[i] && v[i] <= t.upper()[i] + tol)) return false;
  }
  return true;
}

}  // namespace

TEST(LinearForward, Examples) {
  LinearLayer a(IntervalTensor::from_point({1}, {1, 1}), IntervalTensor::from_point({1}, {1}));
  auto y = a.forward(IntervalTensor::from_point({2}, {1, 1}));
  EXPECT_EQ(y.at(0, 0), (Interval{3, 3}));

  LinearLayer b(IntervalTensor::from_point({1, 1}, {1, 2}), IntervalTensor::from_point({0}, {1}));
  auto z = b.forward(IntervalTensor::from_bounds({0, 0}, {1, 1}, {1, 2}));
  expect_near(z.at(0, 0), {0, 2});

  LinearLayer c(IntervalTensor::zeros({2, 3}), IntervalTensor::from_bounds({-1, 0.5}, {1, 0.75}, {2}));
  auto w = c.forward(IntervalTensor::from_bounds({-5, -5, -5, 1, 1, 1}, {5, 5, 5, 2, 2, 2}, {2, 3}));
  for (std::size_t r = 0; r < 2; ++r) {
    expect_near(w.at(r, 0), {-1, 1});
    expect_near(w.at(r, 1), {0.5, 0.75});
  }
}

TEST(LinearForward, ShapeMismatch) {
  LinearLayer a(IntervalTensor::zeros({2, 3}), IntervalTensor::zeros({2}));
  EXPECT_THROW(a.forward(IntervalTensor::zeros({1, 2})), ShapeError);
  EXPECT_THROW(LinearLayer(IntervalTensor::zeros({2, 3}), IntervalTensor::zeros({3})), ShapeError);
}

TEST(LinearBackward, Examples) {
  LinearLayer a(IntervalTensor::from_point({2}, {1, 1}), IntervalTensor::from_point({0}, {1}));
  a.forward(IntervalTensor::from_point({3}, {1, 1}));
  auto g = a.backward(IntervalTensor::from_point({1}, {1, 1}));
  EXPECT_EQ(g.input.at(0, 0), (Interval{2, 2}));
  EXPECT_EQ(g.weights.at(0, 0), (Interval{3, 3}));
  EXPECT_EQ(g.bias[0], (Interval{1, 1}));

  // Point delta and point weights give a point input gradient.
  LinearLayer b(IntervalTensor::from_point({1, -2, 0.5, 3}, {2, 2}), IntervalTensor::zeros({2}));
  b.forward(IntervalTensor::from_bounds({0, 0}, {1, 1}, {1, 2}));
  EXPECT_TRUE(b.backward(IntervalTensor::from_point({0.3, -0.7}, {1, 2})).input.is_degenerate());

  // Two identical samples average to the single-sample gradient.
  LinearLayer one(IntervalTensor::from_point({1, 2}, {1, 2}), IntervalTensor::zeros({1}));
  LinearLayer two = one;
  one.forward(IntervalTensor::from_point({0.5, -1}, {1, 2}));
  two.forward(IntervalTensor::from_point({0.5, -1, 0.5, -1}, {2, 2}));
  auto g1 = one.backward(IntervalTensor::from_point({0.25}, {1, 1}));
  auto g2 = two.backward(IntervalTensor::from_point({0.25, 0.25}, {2, 1}));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(g1.weights[i], g2.weights[i]);
  EXPECT_EQ(g1.bias[0], g2.bias[0]);
}

TEST(LinearBackward, RequiresCachedInput) {
  LinearLayer a(IntervalTensor::zeros({1, 1}), IntervalTensor::zeros({1}));
  EXPECT_THROW(a.backward(iv(1, 1)), Error);
  a.forward(iv(1, 1));
  EXPECT_TRUE(a.has_cached_input());
  a.evaluate(iv(1, 1));
  EXPECT_TRUE(a.has_cached_input());
  auto g = a.backward(iv(1, 1));
  a.apply_update(g, 0.1);
  EXPECT_FALSE(a.has_cached_input());
}

TEST(LinearUpdate, SubtractionAddsRadii) {
  LinearLayer a(IntervalTensor::from_bounds({1.0}, {1.5}, {1, 1}), IntervalTensor::from_point({0.0}, {1}));
  a.forward(IntervalTensor::from_bounds({0.5}, {1.0}, {1, 1}));
  const auto g = a.backward(iv(0.25, 0.75), false);
  const double r_before = a.weights()[0].radius();
  a.apply_update(g, 0.5);
  EXPECT_DOUBLE_EQ(a.weights()[0].radius(), r_before + 0.5 * g.weights[0].radius());
  EXPECT_TRUE(g.input.empty());
}

TEST(LinearLayer, SoundBySampling) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t batch = 1 + rng.below(3), in = 1 + rng.below(4), out = 1 + rng.below(3);
    LinearLayer layer(random_box(rng, {out, in}, 1.0, 0.3), random_box(rng, {out}, 1.0, 0.3));
    const auto x = random_box(rng, {batch, in}, 2.0, 0.5);
    const auto delta = random_box(rng, {batch, out}, 1.0, 0.5);
    const auto y = layer.forward(x);
    const auto g = layer.backward(delta);
    for (int k = 0; k < 50; ++k) {
      const auto w = sample_inside(rng, layer.weights());
      const auto b = sample_inside(rng, layer.bias());
      const auto xv = sample_inside(rng, x);
      const auto dv = sample_inside(rng, delta);
      std::vector<double> yv(batch * out), dx(batch * in, 0.0), dw(out * in, 0.0), db(out, 0.0);
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
          double s = b[o];
          for (std::size_t i = 0; i < in; ++i) {
            s += xv[r * in + i] * w[o * in + i];
            dx[r * in + i] += dv[r * out + o] * w[o * in + i];
            dw[o * in + i] += dv[r * out + o] * xv[r * in + i] / static_cast<double>(batch);
          }
          yv[r * out + o] = s;
          db[o] += dv[r * out + o] / static_cast<double>(batch);
        }
      }
      ASSERT_TRUE(inside(y, yv));
      ASSERT_TRUE(inside(g.input, dx));
      ASSERT_TRUE(inside(g.weights, dw));
      ASSERT_TRUE(inside(g.bias, db));
    }
  }
}

TEST(Relu, ForwardExamples) {
  EXPECT_EQ(relu(iv(-1, 2))[0], (Interval{0, 2}));
  EXPECT_EQ(relu(iv(-3, -1))[0], (Interval{0, 0}));
  EXPECT_EQ(relu(iv(1, 2))[0], (Interval{1, 2}));
}

TEST(Relu, BackwardExamples) {
  ActivationLayer a(ActivationKind::kRelu);
  a.forward(iv(1, 2));
  EXPECT_EQ(a.backward(iv(0.5, 0.5))[0], (Interval{0.5, 0.5}));
  a.forward(iv(-2, -1));
  EXPECT_EQ(a.backward(iv(-3, 7))[0], (Interval{0, 0}));
  a.forward(iv(-1, 1));
  EXPECT_EQ(a.backward(iv(1, 1))[0], (Interval{0, 1}));
}

TEST(Relu, DerivativeAtZeroIsZero) {
  EXPECT_EQ(relu_derivative(iv(0, 0))[0], (Interval{0, 0}));
  EXPECT_EQ(relu_derivative(iv(0, 1))[0], (Interval{0, 1}));
}

TEST(Activation, BackwardRequiresCache) {
  ActivationLayer a(ActivationKind::kSigmoid);
  EXPECT_THROW(a.backward(iv(1, 1)), Error);
}

TEST(Sigmoid, ForwardExamples) {
  EXPECT_EQ(sigmoid(iv(0, 0))[0], (Interval{0.5, 0.5}));
  const auto s = sigmoid(iv(-1000, 1000))[0];
  EXPECT_TRUE(std::isfinite(s.lower) && std::isfinite(s.upper));
  EXPECT_NEAR(s.lower, 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(s.upper, 1.0);
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const auto b = random_box(rng, {1, 1}, 50.0, 20.0);
    const auto r = sigmoid(b)[0];
    EXPECT_LE(r.lower, r.upper);
  }
}

TEST(Sigmoid, DerivativeBoundsBySampling) {
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    const auto b = random_box(rng, {1, 1}, 6.0, 3.0);
    const auto d = sigmoid_derivative(b)[0];
    for (int k = 0; k < 50; ++k) {
      const double x = rng.uniform(b.lower()[0], b.upper()[0]);
      const double s = stable_sigmoid(x);
      ASSERT_TRUE(d.contains(s * (1.0 - s), 1e-15));
    }
  }
  EXPECT_DOUBLE_EQ(sigmoid_derivative(iv(-1, 2))[0].upper, 0.25);
}

TEST(Activation, SoundBySampling) {
  Rng rng(21);
  for (ActivationKind kind : {ActivationKind::kRelu, ActivationKind::kSigmoid}) {
    for (int t = 0; t < 200; ++t) {
      ActivationLayer layer(kind);
      const auto x = random_box(rng, {2, 3}, 3.0, 1.5);
      const auto delta = random_box(rng, {2, 3}, 1.0, 0.5);
      const auto y = layer.forward(x);
      const auto dx = layer.backward(delta);
      for (int k = 0; k < 50; ++k) {
        const auto xv = sample_inside(rng, x);
        const auto dv = sample_inside(rng, delta);
        std::vector<double> yv(xv.size()), gv(xv.size());
        for (std::size_t i = 0; i < xv.size(); ++i) {
          if (kind == ActivationKind::kRelu) {
            yv[i] = std::max(0.0, xv[i]);
            gv[i] = dv[i] * (xv[i] > 0.0 ? 1.0 : 0.0);
          } else {
            const double s = stable_sigmoid(xv[i]);
            yv[i] = s;
            gv[i] = dv[i] * s * (1.0 - s);
          }
        }
        ASSERT_TRUE(inside(y, yv));
        ASSERT_TRUE(inside(dx, gv));
      }
    }
  }
}

TEST(ActivationKind, StringRoundTrip) {
  EXPECT_EQ(activation_from_string(to_string(ActivationKind::kRelu)), ActivationKind::kRelu);
  EXPECT_EQ(activation_from_string(to_string(ActivationKind::kSigmoid)), ActivationKind::kSigmoid);
  EXPECT_THROW(activation_from_string("tanh"), ParseError);
}
