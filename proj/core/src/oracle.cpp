#include "ivcert/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "ivcert/concrete.hpp"
#include "ivcert/error.hpp"
#include "ivcert/losses.hpp"
#include "ivcert/rng.hpp"

namespace ivcert {

IntervalTensor exact_matmul_hull(const IntervalTensor& a, const IntervalTensor& b) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t p = b.cols();
  if (b.rows() != n) throw ShapeError("exact_matmul_hull: inner dimensions differ");
  std::vector<double> lo(m * p, 0.0);
  std::vector<double> hi(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const double al = a.lower()[i * n + k];
        const double au = a.upper()[i * n + k];
        const double bl = b.lower()[k * p + j];
        const double bu = b.upper()[k * p + j];
        const double products[4] = {al * bl, al * bu, au * bl, au * bu};
        lo[i * p + j] += *std::min_element(products, products + 4);
        hi[i * p + j] += *std::max_element(products, products + 4);
      }
    }
  }
  return IntervalTensor::from_bounds(std::move(lo), std::move(hi), Shape{m, p});
}

double containment_margin(Interval bounds, double x) {
  const double scale = std::max({1.0, std::abs(bounds.lower), std::abs(bounds.upper)});
  const double excess = std::max(bounds.lower - x, x - bounds.upper);
  if (std::isnan(x)) return INFINITY;
  return excess / scale;
}

namespace {

// Collapse the widest parameter interval onto its lower bound.
void corrupt_widest_parameter(IntervalModel& model) {
  LinearLayer* target = nullptr;
  bool in_bias = false;
  std::size_t index = 0;
  double widest = -1.0;
  for (auto& layer : model.mutable_layers()) {
    auto* lin = std::get_if<LinearLayer>(&layer);
    if (!lin) continue;
    for (std::size_t i = 0; i < lin->weights().size(); ++i) {
      if (lin->weights()[i].radius() > widest) {
        widest = lin->weights()[i].radius();
        target = lin;
        in_bias = false;
        index = i;
      }
    }
    for (std::size_t i = 0; i < lin->bias().size(); ++i) {
      if (lin->bias()[i].radius() > widest) {
        widest = lin->bias()[i].radius();
        target = lin;
        in_bias = true;
        index = i;
      }
    }
  }
  if (!target) return;
  IntervalTensor w = target->weights();
  IntervalTensor b = target->bias();
  IntervalTensor& t = in_bias ? b : w;
  t.set(index, {t[index].lower, t[index].lower});
  target->set_parameters(std::move(w), std::move(b));
}

class ReplayChecker {
 public:
  ReplayChecker(ReplayReport& report, double rel_slack) : report_(report), rel_slack_(rel_slack) {}

  void check(std::size_t sample, std::size_t step, const char* quantity, std::size_t index,
             Interval bounds, double value) {
    ++report_.checks;
    const double margin = containment_margin(bounds, value);
    report_.worst_margin = std::max(report_.worst_margin, margin);
    if (margin > rel_slack_) {
      ++report_.violations;
      if (!report_.first_violation) {
        report_.first_violation = Violation{sample, step, quantity, index, value, bounds, margin};
      }
    }
  }

 private:
  ReplayReport& report_;
  double rel_slack_;
};

}  // namespace

ReplayReport replay_containment(const TrainTrace& trace, const PerturbedDataset& dataset,
                                const TrainConfig& config, const ReplayOptions& options) {
  dataset.validate();
  const Dataset& clean = dataset.data;
  const double eps = dataset.train_eps;

  ReplayReport report;
  report.samples = options.samples;
  report.rel_slack = options.rel_slack;
  ReplayChecker checker(report, options.rel_slack);

  // Concrete training sets: one fixed perturbation per sampled adversary.
  std::vector<Dataset> perturbed(options.samples, clean);
  for (std::size_t s = 0; s < options.samples; ++s) {
    Rng rng(Rng::derive(options.seed, s));
    for (double& v : perturbed[s].features) v += rng.uniform(-eps, eps);
  }
  std::vector<PointModel> concrete(options.samples, trace.initial);
  IntervalModel interval = lift_to_interval(trace.initial);

  std::vector<double> x;
  std::vector<int> y;
  // A diverged run records fewer steps than its schedule; replay what ran.
  if (trace.steps.size() > trace.schedule.size()) report.trace_consistent = false;
  const std::size_t total = std::min(trace.steps.size(), trace.schedule.size());
  for (std::size_t step = 0; step < total; ++step) {
    const auto& rows = trace.schedule[step];
    y.clear();
    for (std::size_t r : rows) y.push_back(clean.labels[r]);
    const double lr = config.learning_rate_at(step);

    StepRecord rec = sgd_step(interval, inflate_batch(clean, rows, eps), y, lr);
    rec.epoch = trace.steps[step].epoch;
    if (!(rec == trace.steps[step])) report.trace_consistent = false;
    if (options.corrupt_step && *options.corrupt_step == step) corrupt_widest_parameter(interval);
    const std::vector<Interval> params = interval.flat_parameters();

    for (std::size_t s = 0; s < options.samples; ++s) {
      x.clear();
      for (std::size_t r : rows) {
        auto row = perturbed[s].row(r);
        x.insert(x.end(), row.begin(), row.end());
      }
      const double loss = concrete_sgd_step(concrete[s], x, y, lr);
      checker.check(s, step, "loss", 0, rec.loss, loss);
      const std::vector<double> theta = concrete[s].flat_parameters();
      for (std::size_t k = 0; k < theta.size(); ++k) {
        checker.check(s, step, "parameter", k, params[k], theta[k]);
      }
    }
    ++report.steps;
  }

  // Final predictions on the (perturbed) training inputs.
  const std::size_t last = report.steps ? report.steps - 1 : 0;
  const IntervalTensor train_out = interval.evaluate(
      IntervalTensor::inflate(clean.features, eps, Shape{clean.size(), clean.num_features}));
  const std::size_t m = train_out.cols();
  for (std::size_t s = 0; s < options.samples; ++s) {
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const auto logits = concrete_forward(concrete[s], perturbed[s].row(i));
      for (std::size_t j = 0; j < m; ++j) {
        checker.check(s, last, "train_prediction", i * m + j, train_out.at(i, j), logits[j]);
      }
    }
  }

  if (options.probe && !options.probe->empty()) {
    const Dataset& probe = *options.probe;
    const double test_eps = dataset.test_eps;
    const IntervalTensor probe_out = interval.evaluate(
        IntervalTensor::inflate(probe.features, test_eps, Shape{probe.size(), probe.num_features}));
    for (std::size_t s = 0; s < options.samples; ++s) {
      Rng rng(Rng::derive(options.seed ^ 0x7e57, s));
      std::vector<double> xp(probe.num_features);
      for (std::size_t i = 0; i < probe.size(); ++i) {
        auto row = probe.row(i);
        for (std::size_t f = 0; f < xp.size(); ++f) xp[f] = row[f] + rng.uniform(-test_eps, test_eps);
        const auto logits = concrete_forward(concrete[s], xp);
        for (std::size_t j = 0; j < m; ++j) {
          checker.check(s, last, "probe_prediction", i * m + j, probe_out.at(i, j), logits[j]);
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<double> engine_gradients(const PointModel& model, const Dataset& batch) {
  IntervalModel interval = lift_to_interval(model);
  const IntervalTensor x =
      IntervalTensor::from_point(batch.features, Shape{batch.size(), batch.num_features});
  const IntervalTensor logits = interval.forward(x);
  const ModelGradients grads = interval.backward(loss_grad_interval(model.loss, logits, batch.labels));
  std::vector<double> flat;
  for (const auto& g : grads.linear) {
    const auto w = g.weights.center();
    const auto b = g.bias.center();
    flat.insert(flat.end(), w.begin(), w.end());
    flat.insert(flat.end(), b.begin(), b.end());
  }
  return flat;
}

FiniteDiffReport finite_diff_check(const PointModel& model, const Dataset& batch, double h) {
  if (batch.empty()) throw DomainError("finite_diff_check: empty batch");
  if (!(h > 0.0)) throw DomainError("finite_diff_check: step must be positive");
  const std::vector<double> analytic = engine_gradients(model, batch);
  const std::vector<double> theta = model.flat_parameters();

  auto patterns = [&](const PointModel& m) {
    std::vector<bool> all;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto p = activation_pattern(m, batch.row(i));
      all.insert(all.end(), p.begin(), p.end());
    }
    return all;
  };
  const std::vector<bool> base_pattern = patterns(model);

  FiniteDiffReport report;
  PointModel probe = model;
  std::vector<double> shifted = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double step = h;
    std::optional<double> numeric;
    // Shrink the stencil until it no longer crosses a ReLU kink.
    for (int attempt = 0; attempt < 4 && !numeric; ++attempt, step *= 0.1) {
      shifted[k] = theta[k] + step;
      probe.set_flat_parameters(shifted);
      const bool plus_ok = patterns(probe) == base_pattern;
      const double f_plus = concrete_mean_loss(probe, batch.features, batch.labels);
      shifted[k] = theta[k] - step;
      probe.set_flat_parameters(shifted);
      const bool minus_ok = patterns(probe) == base_pattern;
      const double f_minus = concrete_mean_loss(probe, batch.features, batch.labels);
      if (plus_ok && minus_ok) numeric = (f_plus - f_minus) / (2.0 * step);
    }
    shifted[k] = theta[k];
    if (!numeric) {
      ++report.skipped;
      continue;
    }
    ++report.checked;
    const double denom = std::max({std::abs(analytic[k]), std::abs(*numeric), 1e-4});
    const double err = std::abs(analytic[k] - *numeric) / denom;
    if (report.checked == 1 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = k;
      report.analytic = analytic[k];
      report.numeric = *numeric;
    }
  }
  return report;
}

}  // namespace ivcert
