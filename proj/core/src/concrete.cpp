#include "ivcert/concrete.hpp"

#include <algorithm>
#include <cmath>

#include "ivcert/error.hpp"
#include "ivcert/layers.hpp"

namespace ivcert {

namespace {

double activate(ActivationKind kind, double v) {
  return kind == ActivationKind::kRelu ? (v > 0.0 ? v : 0.0) : stable_sigmoid(v);
}

double activate_derivative(ActivationKind kind, double v) {
  if (kind == ActivationKind::kRelu) return v > 0.0 ? 1.0 : 0.0;
  const double s = stable_sigmoid(v);
  return s * (1.0 - s);
}

// Layer inputs recorded during a forward pass: values[k] is the input of layer k.
std::vector<std::vector<double>> forward_trace(const PointModel& model, std::span<const double> x) {
  std::vector<std::vector<double>> values;
  values.reserve(model.layers.size() + 1);
  values.emplace_back(x.begin(), x.end());
  for (const auto& layer : model.layers) {
    const std::vector<double>& in = values.back();
    std::vector<double> out;
    if (const auto* lin = std::get_if<PointLinear>(&layer)) {
      if (in.size() != lin->in) throw ShapeError("concrete_forward: input width mismatch");
      out.assign(lin->out, 0.0);
      for (std::size_t o = 0; o < lin->out; ++o) {
        double acc = 0.0;
        const double* w = lin->weights.data() + o * lin->in;
        for (std::size_t i = 0; i < lin->in; ++i) acc += w[i] * in[i];
        out[o] = acc + lin->bias[o];
      }
    } else {
      const ActivationKind kind = std::get<ActivationKind>(layer);
      out.resize(in.size());
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = activate(kind, in[i]);
    }
    values.push_back(std::move(out));
  }
  return values;
}

std::vector<double> loss_derivative(LossKind loss, std::span<const double> logits, int label) {
  std::vector<double> d(logits.size());
  if (loss == LossKind::kBinaryCrossEntropy) {
    d[0] = stable_sigmoid(logits[0]) - label;
    return d;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    d[i] = std::exp(logits[i] - m) / sum - (static_cast<int>(i) == label ? 1.0 : 0.0);
  }
  return d;
}

}  // namespace

std::vector<double> concrete_forward(const PointModel& model, std::span<const double> x) {
  return forward_trace(model, x).back();
}

std::vector<bool> activation_pattern(const PointModel& model, std::span<const double> x) {
  const auto values = forward_trace(model, x);
  std::vector<bool> pattern;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (std::holds_alternative<ActivationKind>(model.layers[k])) {
      for (double v : values[k]) pattern.push_back(v > 0.0);
    }
  }
  return pattern;
}

double concrete_sample_loss(LossKind loss, std::span<const double> logits, int label) {
  if (loss == LossKind::kBinaryCrossEntropy) return bce_with_logits(logits[0], label);
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return -((logits[static_cast<std::size_t>(label)] - m) - std::log(sum));
}

int concrete_predict(std::span<const double> logits) {
  if (logits.size() == 1) return logits[0] > 0.0 ? 1 : 0;
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

ConcreteGradients concrete_gradients(const PointModel& model, std::span<const double> x,
                                     std::span<const int> labels) {
  const std::size_t batch = labels.size();
  const std::size_t d = model.input_size();
  if (batch == 0 || x.size() != batch * d) throw ShapeError("concrete_gradients: batch shape mismatch");

  // Offsets of each linear layer inside the flat parameter vector.
  std::vector<std::size_t> offset(model.layers.size(), 0);
  std::size_t total = 0;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (const auto* lin = std::get_if<PointLinear>(&model.layers[k])) {
      offset[k] = total;
      total += lin->weights.size() + lin->bias.size();
    }
  }

  ConcreteGradients g;
  g.flat.assign(total, 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    const auto values = forward_trace(model, x.subspan(s * d, d));
    g.mean_loss += concrete_sample_loss(model.loss, values.back(), labels[s]);
    std::vector<double> delta = loss_derivative(model.loss, values.back(), labels[s]);
    for (std::size_t k = model.layers.size(); k-- > 0;) {
      const std::vector<double>& in = values[k];
      if (const auto* lin = std::get_if<PointLinear>(&model.layers[k])) {
        double* gw = g.flat.data() + offset[k];
        double* gb = gw + lin->weights.size();
        for (std::size_t o = 0; o < lin->out; ++o) {
          for (std::size_t i = 0; i < lin->in; ++i) gw[o * lin->in + i] += delta[o] * in[i] * inv_batch;
          gb[o] += delta[o] * inv_batch;
        }
        if (k == 0) break;
        std::vector<double> prev(lin->in, 0.0);
        for (std::size_t o = 0; o < lin->out; ++o) {
          for (std::size_t i = 0; i < lin->in; ++i) prev[i] += delta[o] * lin->weights[o * lin->in + i];
        }
        delta = std::move(prev);
      } else {
        const ActivationKind kind = std::get<ActivationKind>(model.layers[k]);
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= activate_derivative(kind, in[i]);
      }
    }
  }
  g.mean_loss *= inv_batch;
  return g;
}

double concrete_mean_loss(const PointModel& model, std::span<const double> x,
                          std::span<const int> labels) {
  const std::size_t d = model.input_size();
  if (labels.empty() || x.size() != labels.size() * d) throw ShapeError("concrete_mean_loss: shape mismatch");
  double sum = 0.0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    sum += concrete_sample_loss(model.loss, concrete_forward(model, x.subspan(s * d, d)), labels[s]);
  }
  return sum / static_cast<double>(labels.size());
}

double concrete_sgd_step(PointModel& model, std::span<const double> x, std::span<const int> labels,
                         double lr) {
  const ConcreteGradients g = concrete_gradients(model, x, labels);
  std::size_t k = 0;
  for (auto& layer : model.layers) {
    if (auto* lin = std::get_if<PointLinear>(&layer)) {
      for (double& w : lin->weights) w -= lr * g.flat[k++];
      for (double& b : lin->bias) b -= lr * g.flat[k++];
    }
  }
  return g.mean_loss;
}

double concrete_accuracy(const PointModel& model, const Dataset& ds) {
  if (ds.empty()) throw DomainError("concrete_accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (concrete_predict(concrete_forward(model, ds.row(i))) == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace ivcert
