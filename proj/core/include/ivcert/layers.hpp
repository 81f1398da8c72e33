#pragma once

#include <optional>
#include <string_view>

#include "ivcert/interval_tensor.hpp"

namespace ivcert {

enum class ActivationKind { kRelu, kSigmoid };

std::string_view to_string(ActivationKind kind);
ActivationKind activation_from_string(std::string_view name);

/// ReLU image: [relu(lower), relu(upper)].
IntervalTensor relu(const IntervalTensor& x);
/// Step derivative bounds [relu'(lower), relu'(upper)] with relu'(0) = 0.
IntervalTensor relu_derivative(const IntervalTensor& x);
IntervalTensor sigmoid(const IntervalTensor& x);
/// Bounds of sigma(x)(1 - sigma(x)), which peaks at 0.25 for x = 0.
IntervalTensor sigmoid_derivative(const IntervalTensor& x);

/// Overflow-free logistic function.
double stable_sigmoid(double x);

struct LinearGradients {
  IntervalTensor input;    // batch x in; empty when not requested
  IntervalTensor weights;  // out x in, averaged over the batch
  IntervalTensor bias;     // out, averaged over the batch
};

/// Fully connected layer y = x W^T + b with interval weights and bias.
class LinearLayer {
 public:
  LinearLayer(IntervalTensor weights, IntervalTensor bias);

  std::size_t in_features() const { return weights_.cols(); }
  std::size_t out_features() const { return weights_.rows(); }

  const IntervalTensor& weights() const { return weights_; }
  const IntervalTensor& bias() const { return bias_; }

  /// Stateless forward pass.
  IntervalTensor evaluate(const IntervalTensor& x) const;
  /// Forward pass that caches `x` for backward.
  IntervalTensor forward(const IntervalTensor& x);

  /// Backpropagates `delta` (batch x out). Parameter gradients are averaged
  /// over the batch; the input gradient is per sample.
  LinearGradients backward(const IntervalTensor& delta, bool need_input_grad = true) const;

  /// Interval SGD update W <- W - lr * dW, b <- b - lr * db. Invalidates the cache.
  void apply_update(const LinearGradients& grads, double lr);

  void set_parameters(IntervalTensor weights, IntervalTensor bias);

  bool has_cached_input() const { return cached_input_.has_value(); }
  void clear_cache() { cached_input_.reset(); }

 private:
  IntervalTensor weights_;
  IntervalTensor bias_;
  std::optional<IntervalTensor> cached_input_;
};

class ActivationLayer {
 public:
  explicit ActivationLayer(ActivationKind kind) : kind_(kind) {}

  ActivationKind kind() const { return kind_; }

  IntervalTensor evaluate(const IntervalTensor& x) const;
  IntervalTensor forward(const IntervalTensor& x);
  /// delta * f'(cached input), using interval multiplication.
  IntervalTensor backward(const IntervalTensor& delta) const;

  bool has_cached_input() const { return cached_input_.has_value(); }
  void clear_cache() { cached_input_.reset(); }

 private:
  ActivationKind kind_;
  std::optional<IntervalTensor> cached_input_;
};

}  // namespace ivcert
