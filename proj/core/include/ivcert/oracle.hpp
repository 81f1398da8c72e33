#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ivcert/data.hpp"
#include "ivcert/interval_tensor.hpp"
#include "ivcert/model.hpp"
#include "ivcert/trainer.hpp"

namespace ivcert {

/// Exact hull of an interval matrix product by brute force: each output
/// entry is the sum over k of the exact scalar products A[i,k] * B[k,j]
/// (four endpoint products each). Entries are independent variables, so
/// the sum of exact products is the exact hull. Intended for small inputs.
IntervalTensor exact_matmul_hull(const IntervalTensor& a, const IntervalTensor& b);

/// Containment check with a relative slack: passes iff
/// lower - tol <= x <= upper + tol, tol = rel_slack * max(1, |lower|, |upper|).
/// Returns the normalized excess (<= 0 means inside the exact bounds).
double containment_margin(Interval bounds, double x);

struct ReplayOptions {
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  double rel_slack = 1e-7;
  /// Fault injection: after this step, collapse the widest parameter
  /// interval onto its lower bound.
  std::optional<std::size_t> corrupt_step;
  /// Optional held-out set whose points are perturbed within test_eps and
  /// checked against the final interval predictions.
  const Dataset* probe = nullptr;
};

struct Violation {
  std::size_t sample = 0;
  std::size_t step = 0;
  std::string quantity;  // "parameter", "loss", "train_prediction", "probe_prediction"
  std::size_t index = 0;
  double value = 0.0;
  Interval bounds;
  double margin = 0.0;
};

struct ReplayReport {
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_margin = -1.0;
  double rel_slack = 0.0;
  /// Recomputed step records equal the recorded trace bit for bit.
  bool trace_consistent = true;
  std::optional<Violation> first_violation;

  bool passed() const { return violations == 0 && trace_consistent; }
};

/// Draws `samples` concrete training sets with i.i.d. per-feature offsets in
/// [-train_eps, train_eps], trains each with plain SGD from the trace's
/// initial model along the trace's batch schedule, and checks at every step
/// that every concrete parameter and batch loss lies inside the interval
/// run (recomputed from the trace). Final predictions are checked too.
/// Only recorded steps are replayed, so traces of diverged runs work.
ReplayReport replay_containment(const TrainTrace& trace, const PerturbedDataset& dataset,
                                const TrainConfig& config, const ReplayOptions& options);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // parameters whose stencil crosses a ReLU kink
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the interval engine's gradients on a zero-radius model with
/// central differences of the concrete batch-mean loss. Relative error is
/// |g - fd| / max(|g|, |fd|, 1e-4).
FiniteDiffReport finite_diff_check(const PointModel& model, const Dataset& batch, double h = 1e-5);

/// Interval gradients of the batch-mean loss for a degenerate model (centers).
std::vector<double> engine_gradients(const PointModel& model, const Dataset& batch);

}  // namespace ivcert
