#include "ivcert/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ivcert/certifier.hpp"
#include "ivcert/concrete.hpp"
#include "ivcert/error.hpp"
#include "ivcert/losses.hpp"
#include "ivcert/rng.hpp"

namespace ivcert {

void PerturbedDataset::validate() const {
  if (!(train_eps >= 0.0) || !(test_eps >= 0.0)) throw DomainError("perturbation radii must be >= 0");
  if (data.empty()) throw DomainError("training set is empty");
  data.validate();
}

std::string_view to_string(ModelSelection selection) {
  return selection == ModelSelection::kLast ? "last" : "best_validation";
}

ModelSelection selection_from_string(std::string_view name) {
  if (name == "last") return ModelSelection::kLast;
  if (name == "best_validation" || name == "best") return ModelSelection::kBestValidation;
  throw ParseError("unknown model selection '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
  if (!(lr_decay >= 0.0)) throw DomainError("lr_decay must be non-negative");
  if (batch_size == 0) throw DomainError("batch_size must be positive");
  if (max_epochs == 0) throw DomainError("max_epochs must be positive");
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw DomainError("hidden sizes must be positive");
  }
  if (!(divergence_ceiling > 0.0)) throw DomainError("divergence_ceiling must be positive");
}

double TrainConfig::learning_rate_at(std::size_t step) const {
  return learning_rate / (1.0 + lr_decay * static_cast<double>(step));
}

Architecture make_architecture(const TrainConfig& config, std::size_t input_size,
                               std::size_t num_classes) {
  Architecture arch;
  arch.input_size = input_size;
  arch.hidden_sizes = config.hidden_sizes;
  arch.activation = config.activation;
  arch.loss = config.loss;
  arch.output_size = output_width(config.loss, num_classes);
  return arch;
}

std::vector<std::vector<std::size_t>> make_schedule(std::size_t num_samples,
                                                    const TrainConfig& config) {
  Rng rng(Rng::derive(config.seed, 0xba7c));
  std::vector<std::vector<std::size_t>> schedule;
  std::vector<std::size_t> order(num_samples);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < num_samples; ++i) order[i] = i;
    if (config.shuffle) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < num_samples; begin += config.batch_size) {
      const std::size_t end = std::min(num_samples, begin + config.batch_size);
      schedule.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return schedule;
}

std::size_t TrainTrace::radius_decreases() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i].max_radius < steps[i - 1].max_radius) ++n;
  }
  return n;
}

IntervalTensor inflate_batch(const Dataset& ds, std::span<const std::size_t> rows, double eps) {
  std::vector<double> x;
  x.reserve(rows.size() * ds.num_features);
  for (std::size_t r : rows) {
    auto row = ds.row(r);
    x.insert(x.end(), row.begin(), row.end());
  }
  return IntervalTensor::inflate(x, eps, Shape{rows.size(), ds.num_features});
}

StepRecord sgd_step(IntervalModel& model, const IntervalTensor& batch_x,
                    std::span<const int> batch_y, double lr) {
  const IntervalTensor logits = model.forward(batch_x);
  if (!logits.all_finite()) throw DivergenceError("non-finite logits", 0);
  const IntervalTensor losses = loss_interval(model.loss(), logits, batch_y);
  const IntervalTensor grad = loss_grad_interval(model.loss(), logits, batch_y);
  const ModelGradients grads = model.backward(grad);
  for (const auto& g : grads.linear) {
    if (!g.weights.all_finite() || !g.bias.all_finite()) {
      throw DivergenceError("non-finite parameter gradients", 0);
    }
  }
  model.apply_update(grads, lr);

  StepRecord rec;
  rec.learning_rate = lr;
  rec.loss = mean_loss(losses);
  rec.layer_radius = model.layer_radii();
  rec.max_radius = *std::max_element(rec.layer_radius.begin(), rec.layer_radius.end());
  return rec;
}

TrainResult train_certified(const PointModel& initial, const PerturbedDataset& dataset,
                            const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  dataset.validate();
  TrainResult result{lift_to_interval(initial), {}};
  if (result.model.input_size() != dataset.data.num_features) {
    throw ShapeError("train_certified: model expects " + std::to_string(result.model.input_size()) +
                     " features, dataset has " + std::to_string(dataset.data.num_features));
  }
  result.trace.initial = initial;
  result.trace.schedule = make_schedule(dataset.data.size(), config);
  result.trace.steps.reserve(result.trace.schedule.size());

  const std::size_t steps_per_epoch = result.trace.schedule.size() / config.max_epochs;
  std::vector<int> batch_y;
  for (std::size_t step = 0; step < result.trace.schedule.size(); ++step) {
    const auto& rows = result.trace.schedule[step];
    batch_y.clear();
    for (std::size_t r : rows) batch_y.push_back(dataset.data.labels[r]);
    const IntervalTensor batch_x = inflate_batch(dataset.data, rows, dataset.train_eps);

    StepRecord rec;
    try {
      rec = sgd_step(result.model, batch_x, batch_y, config.learning_rate_at(step));
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step), step);
    }
    rec.epoch = steps_per_epoch ? step / steps_per_epoch : 0;
    if (!std::isfinite(rec.loss.upper) || !result.model.parameters_finite()) {
      throw DivergenceError("non-finite values at step " + std::to_string(step), step);
    }
    if (rec.loss.upper > config.divergence_ceiling) {
      std::ostringstream os;
      os << "mean loss upper bound " << rec.loss.upper << " exceeds ceiling "
         << config.divergence_ceiling << " at step " << step << " (max parameter radius "
         << rec.max_radius << ")";
      throw DivergenceError(os.str(), step);
    }
    result.trace.steps.push_back(rec);
    if (observer) observer(step, result.trace.steps.back(), result.model);
  }
  return result;
}

SelectedTraining train_selected(const PointModel& initial, const PerturbedDataset& dataset,
                                const Dataset& validation, const TrainConfig& config,
                                const StepObserver& observer) {
  config.validate();
  const bool select = config.selection == ModelSelection::kBestValidation;
  if (select && validation.empty()) throw DomainError("train_selected: validation set is empty");

  SelectedTraining out;
  out.trace.initial = initial;
  out.trace.schedule = make_schedule(dataset.data.size(), config);
  const std::size_t total = out.trace.schedule.size();
  const std::size_t interval =
      config.selection_interval ? config.selection_interval : total / config.max_epochs;
  double best = -1.0;

  auto record = [&](std::size_t step, const StepRecord& rec, const IntervalModel& model) {
    out.trace.steps.push_back(rec);
    if (select && ((step + 1) % interval == 0 || step + 1 == total)) {
      const double acc = certified_accuracy(model, validation, dataset.test_eps).certified_accuracy;
      if (acc > best) {
        best = acc;
        out.model = model;
        out.selected_step = step + 1;
        out.validation_accuracy = acc;
      }
    }
    if (observer) observer(step, rec, model);
  };

  try {
    TrainResult result = train_certified(initial, dataset, config, record);
    if (!select) {
      out.model = std::move(result.model);
      out.selected_step = total;
      if (!validation.empty()) {
        out.validation_accuracy =
            certified_accuracy(*out.model, validation, dataset.test_eps).certified_accuracy;
      }
    }
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.divergence = e.what();
    if (!select) out.model.reset();
  }
  return out;
}

PretrainResult pretrain_concrete(const PointModel& initial, const Dataset& train,
                                 const Dataset& validation, std::size_t subset_size,
                                 double target_accuracy, const PretrainConfig& config,
                                 std::uint64_t seed) {
  if (subset_size == 0 || subset_size > train.size()) {
    throw DomainError("pretrain_concrete: subset_size must be in [1, N]");
  }
  const Dataset subset = train.head(subset_size);
  const Dataset& eval = validation.empty() ? subset : validation;

  PretrainResult best{initial, concrete_accuracy(initial, eval), false, 0};
  if (best.accuracy >= target_accuracy) {
    best.reached_target = true;
    return best;
  }

  PointModel model = initial;
  TrainConfig schedule_config;
  schedule_config.batch_size = config.batch_size;
  schedule_config.max_epochs = config.max_epochs;
  schedule_config.seed = Rng::derive(seed, 0x9e7a);
  const auto schedule = make_schedule(subset.size(), schedule_config);

  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t step = 0; step < schedule.size(); ++step) {
    x.clear();
    y.clear();
    for (std::size_t r : schedule[step]) {
      auto row = subset.row(r);
      x.insert(x.end(), row.begin(), row.end());
      y.push_back(subset.labels[r]);
    }
    concrete_sgd_step(model, x, y, config.learning_rate);
    const double acc = concrete_accuracy(model, eval);
    if (acc > best.accuracy) best = {model, acc, false, step + 1};
    if (acc >= target_accuracy) {
      return {model, acc, true, step + 1};
    }
  }
  return best;
}

PointModel train_concrete(const PointModel& initial, const Dataset& train, const TrainConfig& config) {
  config.validate();
  PointModel model = initial;
  const auto schedule = make_schedule(train.size(), config);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t step = 0; step < schedule.size(); ++step) {
    x.clear();
    y.clear();
    for (std::size_t r : schedule[step]) {
      auto row = train.row(r);
      x.insert(x.end(), row.begin(), row.end());
      y.push_back(train.labels[r]);
    }
    concrete_sgd_step(model, x, y, config.learning_rate_at(step));
  }
  return model;
}

}  // namespace ivcert
