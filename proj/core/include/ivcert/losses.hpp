#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "ivcert/interval_tensor.hpp"

namespace ivcert {

enum class LossKind { kCrossEntropy, kBinaryCrossEntropy };

std::string_view to_string(LossKind kind);
LossKind loss_from_string(std::string_view name);

/// Number of output logits the loss expects for a `num_classes` problem.
std::size_t output_width(LossKind kind, std::size_t num_classes);

/// Converts one-hot rows (batch x m) to class indices. Throws DomainError on
/// rows that are not exactly one-hot.
std::vector<int> labels_from_one_hot(const std::vector<std::vector<double>>& one_hot);

// Cross-entropy family. `z` is batch x m with m >= 2, `classes` holds one
// class index per row.

/// Tight bounds of log softmax_c(z) per row (batch x 1), each side evaluated
/// with its own shift so exp never overflows.
IntervalTensor logsoftmax_interval(const IntervalTensor& z, std::span<const int> classes);

/// Tight bounds of softmax_c(z) per row (batch x 1).
IntervalTensor softmax_interval(const IntervalTensor& z, std::span<const int> classes);

/// Per-class softmax bounds for every class (batch x m).
IntervalTensor softmax_interval_all(const IntervalTensor& z);

/// -log softmax_y(z), batch x 1.
IntervalTensor ce_loss_interval(const IntervalTensor& z, std::span<const int> labels);

/// softmax(z) - onehot(y), batch x m; every element lies in [-1, 1].
IntervalTensor ce_grad_interval(const IntervalTensor& z, std::span<const int> labels);

// Binary cross-entropy on a single logit column (batch x 1), labels in {0, 1}.

/// Stable scalar BCE-with-logits: z - z y + a + log(exp(-a) + exp(-z - a)), a = max(-z, 0).
double bce_with_logits(double z, int y);

IntervalTensor bce_loss_interval(const IntervalTensor& z, std::span<const int> labels);

/// [sigma(lower) - y, sigma(upper) - y].
IntervalTensor bce_grad_interval(const IntervalTensor& z, std::span<const int> labels);

/// Dispatch on the loss kind; returns batch x 1 per-sample loss bounds.
IntervalTensor loss_interval(LossKind kind, const IntervalTensor& z, std::span<const int> labels);
/// Dispatch on the loss kind; returns dJ/dz bounds with the shape of `z`.
IntervalTensor loss_grad_interval(LossKind kind, const IntervalTensor& z,
                                  std::span<const int> labels);

/// Mean of per-sample bounds; the reported training objective.
Interval mean_loss(const IntervalTensor& per_sample);

}  // namespace ivcert
