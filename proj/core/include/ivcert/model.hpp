#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ivcert/interval_tensor.hpp"
#include "ivcert/layers.hpp"
#include "ivcert/losses.hpp"

namespace ivcert {

/// MLP shape: input width, hidden widths, output width and activation.
struct Architecture {
  std::size_t input_size = 0;
  std::vector<std::size_t> hidden_sizes;
  std::size_t output_size = 1;
  ActivationKind activation = ActivationKind::kRelu;
  LossKind loss = LossKind::kBinaryCrossEntropy;
};

// ---------------------------------------------------------------------------
// Concrete (point) models

struct PointLinear {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

using PointLayer = std::variant<PointLinear, ActivationKind>;

struct PointModel {
  std::vector<PointLayer> layers;
  LossKind loss = LossKind::kBinaryCrossEntropy;

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;
  /// All parameters flattened layer by layer (weights then bias).
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> params);
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
PointModel init_point_model(const Architecture& arch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Interval models

using Layer = std::variant<LinearLayer, ActivationLayer>;

struct ModelGradients {
  /// One entry per linear layer, in layer order.
  std::vector<LinearGradients> linear;
};

class IntervalModel {
 public:
  IntervalModel(std::vector<Layer> layers, LossKind loss);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  LossKind loss() const { return loss_; }
  std::size_t input_size() const;
  std::size_t output_size() const;

  /// Stateless forward pass (inference and certification).
  IntervalTensor evaluate(const IntervalTensor& x) const;
  /// Training forward pass; caches inputs in every layer.
  IntervalTensor forward(const IntervalTensor& x);
  /// Backpropagates dJ/dz from the loss through every layer.
  ModelGradients backward(const IntervalTensor& output_grad) const;
  void apply_update(const ModelGradients& grads, double lr);

  std::size_t parameter_count() const;
  double max_parameter_radius() const;
  /// Max parameter radius per linear layer.
  std::vector<double> layer_radii() const;
  bool parameters_finite() const;

  /// Every parameter interval, in PointModel::flat_parameters() order.
  std::vector<Interval> flat_parameters() const;

 private:
  std::vector<Layer> layers_;
  LossKind loss_;
};

/// Embeds a point model as zero-radius intervals.
IntervalModel lift_to_interval(const PointModel& model);
/// Interval centers as a point model.
PointModel extract_center(const IntervalModel& model);

}  // namespace ivcert
