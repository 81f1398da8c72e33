#include "run_config.hpp"

#include <algorithm>
#include <fstream>

#include "ivcert/checkpoint.hpp"
#include "ivcert/error.hpp"

namespace ivcert::cli {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

namespace {

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

RunConfig resolve(const Overrides& flags, const json& file, const std::vector<std::string>& ignore) {
  static const std::vector<std::string> known = {
      "dataset", "data_seed", "noise_std", "data_dir", "eps", "train_eps", "test_eps",
      "pretrain_target", "pretrain_subset", "pretrain_learning_rate", "pretrain_batch_size",
      "pretrain_max_epochs", "train"};
  for (const auto& [key, value] : file.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end() &&
        std::find(ignore.begin(), ignore.end(), key) == ignore.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  RunConfig c;
  try {
    const std::string name = flags.dataset ? *flags.dataset
                             : file.contains("dataset") ? get<std::string>(file, "dataset")
                                                        : std::string(to_string(DatasetKind::kTwoMoons));
    c.data.kind = dataset_from_string(name);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  c.run.config = default_train_config(c.data.kind);
  c.run.train_eps = c.run.test_eps = default_eps(c.data.kind);

  // Config file.
  if (file.contains("data_seed")) c.data.seed = get<std::uint64_t>(file, "data_seed");
  if (file.contains("noise_std")) c.data.noise_std = get<double>(file, "noise_std");
  if (file.contains("data_dir")) c.data.data_dir = get<std::string>(file, "data_dir");
  if (file.contains("eps")) c.run.train_eps = c.run.test_eps = get<double>(file, "eps");
  if (file.contains("train_eps")) c.run.train_eps = get<double>(file, "train_eps");
  if (file.contains("test_eps")) c.run.test_eps = get<double>(file, "test_eps");
  if (file.contains("pretrain_target") && !file.at("pretrain_target").is_null()) {
    c.run.pretrain_target = get<double>(file, "pretrain_target");
  }
  if (file.contains("pretrain_subset")) c.run.pretrain_subset = get<std::size_t>(file, "pretrain_subset");
  if (file.contains("pretrain_learning_rate")) {
    c.run.pretrain.learning_rate = get<double>(file, "pretrain_learning_rate");
  }
  if (file.contains("pretrain_batch_size")) {
    c.run.pretrain.batch_size = get<std::size_t>(file, "pretrain_batch_size");
  }
  if (file.contains("pretrain_max_epochs")) {
    c.run.pretrain.max_epochs = get<std::size_t>(file, "pretrain_max_epochs");
  }
  if (file.contains("train")) {
    if (!file.at("train").is_object()) throw ConfigError("config key 'train' must be an object");
    try {
      c.run.config = config_from_json(file.at("train").dump(), c.run.config);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }

  // Flags.
  if (flags.data_dir) c.data.data_dir = *flags.data_dir;
  if (flags.data_seed) c.data.seed = *flags.data_seed;
  if (flags.seed) c.run.config.seed = *flags.seed;
  if (flags.eps) c.run.train_eps = c.run.test_eps = *flags.eps;
  if (flags.eps_test) c.run.test_eps = *flags.eps_test;
  if (flags.lr) c.run.config.learning_rate = *flags.lr;
  if (flags.batch_size) c.run.config.batch_size = *flags.batch_size;
  if (flags.epochs) c.run.config.max_epochs = *flags.epochs;
  if (!flags.hidden.empty()) c.run.config.hidden_sizes = flags.hidden;
  if (flags.pretrain_target) c.run.pretrain_target = *flags.pretrain_target;
  if (flags.selection) {
    try {
      c.run.config.selection = selection_from_string(*flags.selection);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }

  check_range(c.run.train_eps >= 0 && c.run.test_eps >= 0, "eps values must be non-negative");
  check_range(c.data.noise_std >= 0, "noise_std must be non-negative");
  if (c.run.pretrain_target) {
    check_range(*c.run.pretrain_target >= 0.5 && *c.run.pretrain_target <= 1.0,
                "pretrain_target must lie in [0.5, 1]");
  }
  check_range(c.run.pretrain_subset > 0 && c.run.pretrain.batch_size > 0 && c.run.pretrain.max_epochs > 0 &&
                  c.run.pretrain.learning_rate > 0,
              "pretraining settings must be positive");
  try {
    c.run.config.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["dataset"] = std::string(to_string(c.data.kind));
  j["data_seed"] = c.data.seed;
  j["noise_std"] = c.data.noise_std;
  j["data_dir"] = c.data.data_dir.string();
  j["train_eps"] = c.run.train_eps;
  j["test_eps"] = c.run.test_eps;
  j["pretrain_target"] = c.run.pretrain_target ? json(*c.run.pretrain_target) : json(nullptr);
  j["pretrain_subset"] = c.run.pretrain_subset;
  j["pretrain_learning_rate"] = c.run.pretrain.learning_rate;
  j["pretrain_batch_size"] = c.run.pretrain.batch_size;
  j["pretrain_max_epochs"] = c.run.pretrain.max_epochs;
  j["train"] = json::parse(config_to_json(c.run.config));
  return j;
}

}  // namespace ivcert::cli
