#pragma once

#include <span>
#include <vector>

#include "ivcert/data.hpp"
#include "ivcert/model.hpp"

namespace ivcert {

// Plain floating-point MLP evaluation and SGD on point models. Written with
// scalar loops, independently of the interval engine, so it can serve as
// the reference side of the soundness checks.

/// Output logits for one input row.
std::vector<double> concrete_forward(const PointModel& model, std::span<const double> x);

/// Pre-activation signs (> 0) of every hidden unit for one input; used to
/// detect ReLU kinks during finite differencing.
std::vector<bool> activation_pattern(const PointModel& model, std::span<const double> x);

double concrete_sample_loss(LossKind loss, std::span<const double> logits, int label);

/// Predicted class: logit > 0 for a single-logit head, argmax otherwise.
int concrete_predict(std::span<const double> logits);

struct ConcreteGradients {
  std::vector<double> flat;  // PointModel::flat_parameters() order
  double mean_loss = 0.0;
};

/// Gradient of the batch-mean loss. `x` is batch x d row-major.
ConcreteGradients concrete_gradients(const PointModel& model, std::span<const double> x,
                                     std::span<const int> labels);

double concrete_mean_loss(const PointModel& model, std::span<const double> x,
                          std::span<const int> labels);

/// One SGD step; returns the batch-mean loss before the update.
double concrete_sgd_step(PointModel& model, std::span<const double> x, std::span<const int> labels,
                         double lr);

double concrete_accuracy(const PointModel& model, const Dataset& ds);

}  // namespace ivcert
