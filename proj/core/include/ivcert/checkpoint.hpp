#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ivcert/model.hpp"
#include "ivcert/trainer.hpp"

namespace ivcert {

// On-disk formats (JSON, numbers written with round-trip precision).
//
// Checkpoint, "format": "ivcert.checkpoint", "version": 1
//   {
//     "loss": "binary_cross_entropy" | "cross_entropy",
//     "layers": [
//       {"type": "linear", "in": n, "out": m,
//        "weight_lower": [m*n], "weight_upper": [m*n],    // row-major out x in
//        "bias_lower": [m], "bias_upper": [m]},
//       {"type": "activation", "kind": "relu" | "sigmoid"}, ...
//     ],
//     "config": {TrainConfig fields},
//     "train_eps": e, "test_eps": e', "dataset": "two-moons" | "mnist17",
//     "metadata": {...}                                    // free-form
//   }
//
// Trace, "format": "ivcert.trace", "version": 1
//   {
//     "initial": {"loss": ..., "layers": [{"type": "linear", "in", "out",
//                 "weights": [...], "bias": [...]}, {"type": "activation", ...}]},
//     "schedule": [[row indices of step 0], ...],
//     "steps": [{"epoch", "lr", "loss_lower", "loss_upper", "max_radius",
//                "layer_radius": [...]}, ...]
//   }

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  IntervalModel model;
  TrainConfig config;
  double train_eps = 0.0;
  double test_eps = 0.0;
  std::string dataset;
  /// Serialized JSON object with free-form provenance; "{}" when unused.
  std::string metadata = "{}";
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws ParseError on malformed files or unsupported versions.
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_trace(const std::filesystem::path& path, const TrainTrace& trace);
TrainTrace load_trace(const std::filesystem::path& path);

/// TrainConfig as a JSON object string.
std::string config_to_json(const TrainConfig& config);
/// Overlays the keys present in `json` on top of `defaults`. Unknown keys
/// and wrongly typed values throw ParseError.
TrainConfig config_from_json(std::string_view json, TrainConfig defaults = {});

}  // namespace ivcert
