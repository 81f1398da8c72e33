#include "ivcert/layers.hpp"

#include <algorithm>
#include <cmath>

#include "ivcert/error.hpp"

namespace ivcert {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kSigmoid:
      return "sigmoid";
  }
  return "unknown";
}

ActivationKind activation_from_string(std::string_view name) {
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  throw ParseError("unknown activation '" + std::string(name) + "'");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

IntervalTensor relu(const IntervalTensor& x) {
  return apply_monotonic(x, [](double v) { return v > 0.0 ? v : 0.0; }, Monotonicity::kIncreasing);
}

IntervalTensor relu_derivative(const IntervalTensor& x) {
  return apply_monotonic(x, [](double v) { return v > 0.0 ? 1.0 : 0.0; },
                         Monotonicity::kIncreasing);
}

IntervalTensor sigmoid(const IntervalTensor& x) {
  return apply_monotonic(x, stable_sigmoid, Monotonicity::kIncreasing);
}

IntervalTensor sigmoid_derivative(const IntervalTensor& x) {
  // sigma' increases on (-inf, 0] and decreases on [0, inf).
  auto d = [](double v) {
    const double s = stable_sigmoid(v);
    return s * (1.0 - s);
  };
  std::vector<double> lo(x.size());
  std::vector<double> hi(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = x.lower()[i];
    const double u = x.upper()[i];
    const double dl = d(l);
    const double du = d(u);
    lo[i] = std::min(dl, du);
    hi[i] = (l <= 0.0 && 0.0 <= u) ? 0.25 : std::max(dl, du);
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), x.shape());
}

// ---------------------------------------------------------------------------

LinearLayer::LinearLayer(IntervalTensor weights, IntervalTensor bias) {
  set_parameters(std::move(weights), std::move(bias));
}

void LinearLayer::set_parameters(IntervalTensor weights, IntervalTensor bias) {
  if (weights.rank() != 2) throw ShapeError("LinearLayer: weights must be rank 2");
  if (bias.rank() != 1 || bias.size() != weights.rows()) {
    throw ShapeError("LinearLayer: bias " + shape_string(bias.shape()) +
                     " does not match weights " + shape_string(weights.shape()));
  }
  weights_ = std::move(weights);
  bias_ = std::move(bias);
  cached_input_.reset();
}

IntervalTensor LinearLayer::evaluate(const IntervalTensor& x) const {
  if (x.rank() != 2 || x.cols() != in_features()) {
    throw ShapeError("LinearLayer: input " + shape_string(x.shape()) + " does not match " +
                     std::to_string(in_features()) + " input features");
  }
  return add(rump_matmul(x, transpose(weights_)), bias_);
}

IntervalTensor LinearLayer::forward(const IntervalTensor& x) {
  IntervalTensor y = evaluate(x);
  cached_input_ = x;
  return y;
}

LinearGradients LinearLayer::backward(const IntervalTensor& delta, bool need_input_grad) const {
  if (!cached_input_) throw Error("LinearLayer::backward called without a cached forward input");
  const IntervalTensor& x = *cached_input_;
  if (delta.rank() != 2 || delta.rows() != x.rows() || delta.cols() != out_features()) {
    throw ShapeError("LinearLayer::backward: delta " + shape_string(delta.shape()) +
                     " does not match batch " + std::to_string(x.rows()) + " x " +
                     std::to_string(out_features()));
  }
  const double inv_batch = 1.0 / static_cast<double>(x.rows());
  LinearGradients g;
  if (need_input_grad) g.input = rump_matmul(delta, weights_);
  g.weights = scale(rump_matmul(transpose(delta), x), inv_batch);
  g.bias = reduce_mean(delta, 0);
  return g;
}

void LinearLayer::apply_update(const LinearGradients& grads, double lr) {
  if (grads.weights.shape() != weights_.shape() || grads.bias.shape() != bias_.shape()) {
    throw ShapeError("LinearLayer::apply_update: gradient shapes do not match parameters");
  }
  weights_ = sub(weights_, scale(grads.weights, lr));
  bias_ = sub(bias_, scale(grads.bias, lr));
  cached_input_.reset();
}

// ---------------------------------------------------------------------------

IntervalTensor ActivationLayer::evaluate(const IntervalTensor& x) const {
  return kind_ == ActivationKind::kRelu ? relu(x) : sigmoid(x);
}

IntervalTensor ActivationLayer::forward(const IntervalTensor& x) {
  IntervalTensor y = evaluate(x);
  cached_input_ = x;
  return y;
}

IntervalTensor ActivationLayer::backward(const IntervalTensor& delta) const {
  if (!cached_input_) {
    throw Error("ActivationLayer::backward called without a cached forward input");
  }
  const IntervalTensor derivative = kind_ == ActivationKind::kRelu
                                        ? relu_derivative(*cached_input_)
                                        : sigmoid_derivative(*cached_input_);
  return mul(delta, derivative);
}

}  // namespace ivcert
