#include "ivcert/model.hpp"

#include <algorithm>
#include <cmath>

#include "ivcert/error.hpp"
#include "ivcert/rng.hpp"

namespace ivcert {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::size_t PointModel::input_size() const {
  for (const auto& layer : layers) {
    if (const auto* lin = std::get_if<PointLinear>(&layer)) return lin->in;
  }
  return 0;
}

std::size_t PointModel::output_size() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (const auto* lin = std::get_if<PointLinear>(&*it)) return lin->out;
  }
  return 0;
}

std::size_t PointModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    if (const auto* lin = std::get_if<PointLinear>(&layer)) n += lin->weights.size() + lin->bias.size();
  }
  return n;
}

std::vector<double> PointModel::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers) {
    if (const auto* lin = std::get_if<PointLinear>(&layer)) {
      out.insert(out.end(), lin->weights.begin(), lin->weights.end());
      out.insert(out.end(), lin->bias.begin(), lin->bias.end());
    }
  }
  return out;
}

void PointModel::set_flat_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw ShapeError("set_flat_parameters: size mismatch");
  std::size_t k = 0;
  for (auto& layer : layers) {
    if (auto* lin = std::get_if<PointLinear>(&layer)) {
      for (double& w : lin->weights) w = params[k++];
      for (double& b : lin->bias) b = params[k++];
    }
  }
}

PointModel init_point_model(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_size == 0 || arch.output_size == 0) {
    throw DomainError("init_point_model: input and output sizes must be positive");
  }
  Rng rng(seed);
  PointModel model;
  model.loss = arch.loss;
  std::vector<std::size_t> widths{arch.input_size};
  widths.insert(widths.end(), arch.hidden_sizes.begin(), arch.hidden_sizes.end());
  widths.push_back(arch.output_size);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l + 1] == 0) throw DomainError("init_point_model: hidden sizes must be positive");
    PointLinear lin;
    lin.in = widths[l];
    lin.out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(lin.in));
    lin.weights.resize(lin.in * lin.out);
    lin.bias.resize(lin.out);
    for (double& w : lin.weights) w = rng.uniform(-bound, bound);
    for (double& b : lin.bias) b = rng.uniform(-bound, bound);
    model.layers.emplace_back(std::move(lin));
    if (l + 2 < widths.size()) model.layers.emplace_back(arch.activation);
  }
  return model;
}

// ---------------------------------------------------------------------------

IntervalModel::IntervalModel(std::vector<Layer> layers, LossKind loss)
    : layers_(std::move(layers)), loss_(loss) {
  std::size_t width = 0;
  for (const auto& layer : layers_) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      if (width != 0 && lin->in_features() != width) {
        throw ShapeError("IntervalModel: layer expects " + std::to_string(lin->in_features()) +
                         " inputs but previous layer produces " + std::to_string(width));
      }
      width = lin->out_features();
    }
  }
  if (width == 0) throw ShapeError("IntervalModel: needs at least one linear layer");
  if (loss_ == LossKind::kBinaryCrossEntropy && width != 1) {
    throw ShapeError("IntervalModel: binary cross-entropy needs exactly one output logit");
  }
  if (loss_ == LossKind::kCrossEntropy && width < 2) {
    throw ShapeError("IntervalModel: cross-entropy needs at least two output logits");
  }
}

std::size_t IntervalModel::input_size() const {
  for (const auto& layer : layers_) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) return lin->in_features();
  }
  return 0;
}

std::size_t IntervalModel::output_size() const {
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (const auto* lin = std::get_if<LinearLayer>(&*it)) return lin->out_features();
  }
  return 0;
}

IntervalTensor IntervalModel::evaluate(const IntervalTensor& x) const {
  IntervalTensor h = x;
  for (const auto& layer : layers_) {
    h = std::visit([&](const auto& l) { return l.evaluate(h); }, layer);
  }
  return h;
}

IntervalTensor IntervalModel::forward(const IntervalTensor& x) {
  IntervalTensor h = x;
  for (auto& layer : layers_) {
    h = std::visit([&](auto& l) { return l.forward(h); }, layer);
  }
  return h;
}

ModelGradients IntervalModel::backward(const IntervalTensor& output_grad) const {
  // Index of the first linear layer: its input gradient is never needed.
  std::size_t first_linear = layers_.size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<LinearLayer>(layers_[i])) {
      first_linear = i;
      break;
    }
  }

  ModelGradients grads;
  IntervalTensor delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    std::visit(Overloaded{
                   [&](const LinearLayer& lin) {
                     LinearGradients g = lin.backward(delta, i != first_linear);
                     delta = g.input;
                     grads.linear.push_back(std::move(g));
                   },
                   [&](const ActivationLayer& act) { delta = act.backward(delta); },
               },
               layers_[i]);
    if (i == first_linear) break;
  }
  std::reverse(grads.linear.begin(), grads.linear.end());
  return grads;
}

void IntervalModel::apply_update(const ModelGradients& grads, double lr) {
  std::size_t k = 0;
  for (auto& layer : layers_) {
    if (auto* lin = std::get_if<LinearLayer>(&layer)) {
      if (k >= grads.linear.size()) throw ShapeError("apply_update: missing gradients");
      lin->apply_update(grads.linear[k++], lr);
    } else {
      std::get<ActivationLayer>(layer).clear_cache();
    }
  }
}

std::size_t IntervalModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      n += lin->weights().size() + lin->bias().size();
    }
  }
  return n;
}

double IntervalModel::max_parameter_radius() const {
  double r = 0.0;
  for (double lr : layer_radii()) r = std::max(r, lr);
  return r;
}

std::vector<double> IntervalModel::layer_radii() const {
  std::vector<double> radii;
  for (const auto& layer : layers_) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      radii.push_back(std::max(lin->weights().max_radius(), lin->bias().max_radius()));
    }
  }
  return radii;
}

bool IntervalModel::parameters_finite() const {
  for (const auto& layer : layers_) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      if (!lin->weights().all_finite() || !lin->bias().all_finite()) return false;
    }
  }
  return true;
}

std::vector<Interval> IntervalModel::flat_parameters() const {
  std::vector<Interval> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers_) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      for (std::size_t i = 0; i < lin->weights().size(); ++i) out.push_back(lin->weights()[i]);
      for (std::size_t i = 0; i < lin->bias().size(); ++i) out.push_back(lin->bias()[i]);
    }
  }
  return out;
}

IntervalModel lift_to_interval(const PointModel& model) {
  std::vector<Layer> layers;
  for (const auto& layer : model.layers) {
    std::visit(Overloaded{
                   [&](const PointLinear& lin) {
                     layers.emplace_back(LinearLayer(
                         IntervalTensor::from_point(lin.weights, Shape{lin.out, lin.in}),
                         IntervalTensor::from_point(lin.bias, Shape{lin.out})));
                   },
                   [&](ActivationKind kind) { layers.emplace_back(ActivationLayer(kind)); },
               },
               layer);
  }
  return IntervalModel(std::move(layers), model.loss);
}

PointModel extract_center(const IntervalModel& model) {
  PointModel out;
  out.loss = model.loss();
  for (const auto& layer : model.layers()) {
    std::visit(Overloaded{
                   [&](const LinearLayer& lin) {
                     PointLinear p;
                     p.in = lin.in_features();
                     p.out = lin.out_features();
                     p.weights = lin.weights().center();
                     p.bias = lin.bias().center();
                     out.layers.emplace_back(std::move(p));
                   },
                   [&](const ActivationLayer& act) { out.layers.emplace_back(act.kind()); },
               },
               layer);
  }
  return out;
}

}  // namespace ivcert
