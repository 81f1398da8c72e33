#include "ivcert/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ivcert/error.hpp"
#include "ivcert/layers.hpp"

namespace ivcert {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return "cross_entropy";
    case LossKind::kBinaryCrossEntropy:
      return "binary_cross_entropy";
  }
  return "unknown";
}

LossKind loss_from_string(std::string_view name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::kCrossEntropy;
  if (name == "binary_cross_entropy" || name == "bce") return LossKind::kBinaryCrossEntropy;
  throw ParseError("unknown loss '" + std::string(name) + "'");
}

std::size_t output_width(LossKind kind, std::size_t num_classes) {
  if (kind == LossKind::kBinaryCrossEntropy) {
    if (num_classes != 2) throw DomainError("binary cross-entropy needs exactly 2 classes");
    return 1;
  }
  if (num_classes < 2) throw DomainError("cross-entropy needs at least 2 classes");
  return num_classes;
}

std::vector<int> labels_from_one_hot(const std::vector<std::vector<double>>& one_hot) {
  std::vector<int> labels;
  labels.reserve(one_hot.size());
  for (const auto& row : one_hot) {
    int hot = -1;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] == 1.0) {
        if (hot >= 0) throw DomainError("malformed one-hot label: several ones");
        hot = static_cast<int>(j);
      } else if (row[j] != 0.0) {
        throw DomainError("malformed one-hot label: entries must be 0 or 1");
      }
    }
    if (hot < 0) throw DomainError("malformed one-hot label: no class set");
    labels.push_back(hot);
  }
  return labels;
}

namespace {

void check_ce_inputs(const IntervalTensor& z, std::span<const int> classes) {
  if (z.rank() != 2) throw ShapeError("cross-entropy: logits must be batch x m");
  if (z.cols() < 2) throw DomainError("cross-entropy: need at least 2 logits");
  if (classes.size() != z.rows()) throw ShapeError("cross-entropy: one label per row required");
  for (int c : classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= z.cols()) {
      throw DomainError("cross-entropy: label " + std::to_string(c) + " out of range");
    }
  }
}

void check_bce_inputs(const IntervalTensor& z, std::span<const int> labels) {
  if (z.rank() != 2 || z.cols() != 1) throw ShapeError("binary cross-entropy: logits must be batch x 1");
  if (labels.size() != z.rows()) throw ShapeError("binary cross-entropy: one label per row required");
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw DomainError("binary cross-entropy: label " + std::to_string(y) + " not in {0, 1}");
    }
  }
}

// Log-sum-exp pieces for one row and class c. The lower bound pairs the
// target's lower logit with the competitors' upper logits, the upper bound
// the other way around; each side is shifted by its own maximum.
struct ClassBounds {
  double log_lower;
  double log_upper;
  double prob_lower;
  double prob_upper;
};

ClassBounds class_bounds(const double* lo, const double* hi, std::size_t m, std::size_t c) {
  double a = lo[c];
  double b = hi[c];
  for (std::size_t i = 0; i < m; ++i) {
    if (i == c) continue;
    a = std::max(a, hi[i]);
    b = std::max(b, lo[i]);
  }
  double sum_l = std::exp(lo[c] - a);
  double sum_u = std::exp(hi[c] - b);
  for (std::size_t i = 0; i < m; ++i) {
    if (i == c) continue;
    sum_l += std::exp(hi[i] - a);
    sum_u += std::exp(lo[i] - b);
  }
  ClassBounds out;
  out.log_lower = (lo[c] - a) - std::log(sum_l);
  out.log_upper = (hi[c] - b) - std::log(sum_u);
  out.prob_lower = std::exp(lo[c] - a) / sum_l;
  out.prob_upper = std::exp(hi[c] - b) / sum_u;
  if (out.log_lower > out.log_upper) std::swap(out.log_lower, out.log_upper);
  if (out.prob_lower > out.prob_upper) std::swap(out.prob_lower, out.prob_upper);
  return out;
}

}  // namespace

IntervalTensor logsoftmax_interval(const IntervalTensor& z, std::span<const int> classes) {
  check_ce_inputs(z, classes);
  const std::size_t n = z.rows();
  const std::size_t m = z.cols();
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t r = 0; r < n; ++r) {
    const ClassBounds cb = class_bounds(z.lower().data() + r * m, z.upper().data() + r * m, m,
                                        static_cast<std::size_t>(classes[r]));
    lo[r] = cb.log_lower;
    hi[r] = cb.log_upper;
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), Shape{n, 1});
}

IntervalTensor softmax_interval(const IntervalTensor& z, std::span<const int> classes) {
  check_ce_inputs(z, classes);
  const std::size_t n = z.rows();
  const std::size_t m = z.cols();
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t r = 0; r < n; ++r) {
    const ClassBounds cb = class_bounds(z.lower().data() + r * m, z.upper().data() + r * m, m,
                                        static_cast<std::size_t>(classes[r]));
    lo[r] = cb.prob_lower;
    hi[r] = cb.prob_upper;
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), Shape{n, 1});
}

IntervalTensor softmax_interval_all(const IntervalTensor& z) {
  if (z.rank() != 2 || z.cols() < 2) throw DomainError("softmax: need batch x m logits, m >= 2");
  const std::size_t n = z.rows();
  const std::size_t m = z.cols();
  std::vector<double> lo(n * m);
  std::vector<double> hi(n * m);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const ClassBounds cb = class_bounds(z.lower().data() + r * m, z.upper().data() + r * m, m, c);
      lo[r * m + c] = cb.prob_lower;
      hi[r * m + c] = cb.prob_upper;
    }
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), z.shape());
}

IntervalTensor ce_loss_interval(const IntervalTensor& z, std::span<const int> labels) {
  return neg(logsoftmax_interval(z, labels));
}

IntervalTensor ce_grad_interval(const IntervalTensor& z, std::span<const int> labels) {
  check_ce_inputs(z, labels);
  const std::size_t m = z.cols();
  std::vector<double> onehot(z.size(), 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    onehot[r * m + static_cast<std::size_t>(labels[r])] = -1.0;
  }
  return shift(softmax_interval_all(z), onehot);
}

double bce_with_logits(double z, int y) {
  const double a = std::max(-z, 0.0);
  return z - z * y + a + std::log(std::exp(-a) + std::exp(-z - a));
}

IntervalTensor bce_loss_interval(const IntervalTensor& z, std::span<const int> labels) {
  check_bce_inputs(z, labels);
  const std::size_t n = z.rows();
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double at_lower = bce_with_logits(z.lower()[r], labels[r]);
    const double at_upper = bce_with_logits(z.upper()[r], labels[r]);
    lo[r] = std::min(at_lower, at_upper);
    hi[r] = std::max(at_lower, at_upper);
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), Shape{n, 1});
}

IntervalTensor bce_grad_interval(const IntervalTensor& z, std::span<const int> labels) {
  check_bce_inputs(z, labels);
  const std::size_t n = z.rows();
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t r = 0; r < n; ++r) {
    lo[r] = stable_sigmoid(z.lower()[r]) - labels[r];
    hi[r] = stable_sigmoid(z.upper()[r]) - labels[r];
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), Shape{n, 1});
}

IntervalTensor loss_interval(LossKind kind, const IntervalTensor& z, std::span<const int> labels) {
  return kind == LossKind::kCrossEntropy ? ce_loss_interval(z, labels)
                                         : bce_loss_interval(z, labels);
}

IntervalTensor loss_grad_interval(LossKind kind, const IntervalTensor& z,
                                  std::span<const int> labels) {
  return kind == LossKind::kCrossEntropy ? ce_grad_interval(z, labels)
                                         : bce_grad_interval(z, labels);
}

Interval mean_loss(const IntervalTensor& per_sample) {
  if (per_sample.empty()) return {};
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    lo += per_sample.lower()[i];
    hi += per_sample.upper()[i];
  }
  const double n = static_cast<double>(per_sample.size());
  return {lo / n, hi / n};
}

}  // namespace ivcert
