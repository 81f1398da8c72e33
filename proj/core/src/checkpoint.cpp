#include "ivcert/checkpoint.hpp"

#include <fstream>
#include <set>

#include "ivcert/error.hpp"
#include "json.hpp"

namespace ivcert {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump() << '\n';
}

void expect_format(const json& j, const char* format, const std::filesystem::path& path) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw ParseError(path.string() + ": not an " + std::string(format) + " file");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported version " + j.value("version", json()).dump());
  }
}

json point_model_to_json(const PointModel& model) {
  json layers = json::array();
  for (const auto& layer : model.layers) {
    if (const auto* lin = std::get_if<PointLinear>(&layer)) {
      layers.push_back({{"type", "linear"},
                        {"in", lin->in},
                        {"out", lin->out},
                        {"weights", lin->weights},
                        {"bias", lin->bias}});
    } else {
      layers.push_back({{"type", "activation"}, {"kind", to_string(std::get<ActivationKind>(layer))}});
    }
  }
  return {{"loss", to_string(model.loss)}, {"layers", layers}};
}

PointModel point_model_from_json(const json& j) {
  PointModel model;
  model.loss = loss_from_string(j.at("loss").get<std::string>());
  for (const auto& l : j.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    if (type == "linear") {
      PointLinear lin;
      lin.in = l.at("in").get<std::size_t>();
      lin.out = l.at("out").get<std::size_t>();
      lin.weights = l.at("weights").get<std::vector<double>>();
      lin.bias = l.at("bias").get<std::vector<double>>();
      if (lin.weights.size() != lin.in * lin.out || lin.bias.size() != lin.out) {
        throw ParseError("point model: parameter array sizes do not match layer dims");
      }
      model.layers.emplace_back(std::move(lin));
    } else if (type == "activation") {
      model.layers.emplace_back(activation_from_string(l.at("kind").get<std::string>()));
    } else {
      throw ParseError("unknown layer type '" + type + "'");
    }
  }
  return model;
}

json interval_layers_to_json(const IntervalModel& model) {
  json layers = json::array();
  for (const auto& layer : model.layers()) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
      layers.push_back({{"type", "linear"},
                        {"in", lin->in_features()},
                        {"out", lin->out_features()},
                        {"weight_lower", vec(lin->weights().lower())},
                        {"weight_upper", vec(lin->weights().upper())},
                        {"bias_lower", vec(lin->bias().lower())},
                        {"bias_upper", vec(lin->bias().upper())}});
    } else {
      layers.push_back(
          {{"type", "activation"}, {"kind", to_string(std::get<ActivationLayer>(layer).kind())}});
    }
  }
  return layers;
}

IntervalModel interval_model_from_json(const json& layers_json, LossKind loss) {
  std::vector<Layer> layers;
  for (const auto& l : layers_json) {
    const std::string type = l.at("type").get<std::string>();
    if (type == "linear") {
      const auto in = l.at("in").get<std::size_t>();
      const auto out = l.at("out").get<std::size_t>();
      layers.emplace_back(LinearLayer(
          IntervalTensor::from_bounds(l.at("weight_lower").get<std::vector<double>>(),
                                      l.at("weight_upper").get<std::vector<double>>(), Shape{out, in}),
          IntervalTensor::from_bounds(l.at("bias_lower").get<std::vector<double>>(),
                                      l.at("bias_upper").get<std::vector<double>>(), Shape{out})));
    } else if (type == "activation") {
      layers.emplace_back(ActivationLayer(activation_from_string(l.at("kind").get<std::string>())));
    } else {
      throw ParseError("unknown layer type '" + type + "'");
    }
  }
  return IntervalModel(std::move(layers), loss);
}

json config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"lr_decay", c.lr_decay},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"seed", c.seed},
          {"hidden_sizes", c.hidden_sizes},
          {"activation", to_string(c.activation)},
          {"loss", to_string(c.loss)},
          {"shuffle", c.shuffle},
          {"divergence_ceiling", c.divergence_ceiling},
          {"selection", to_string(c.selection)},
          {"selection_interval", c.selection_interval}};
}

TrainConfig config_from(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  static const std::set<std::string> known{"learning_rate", "lr_decay",    "batch_size",
                                           "max_epochs",    "seed",        "hidden_sizes",
                                           "activation",    "loss",        "shuffle",
                                           "divergence_ceiling", "selection", "selection_interval"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ParseError("unknown training config key '" + key + "'");
  }
  try {
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("lr_decay")) c.lr_decay = j["lr_decay"].get<double>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("hidden_sizes")) c.hidden_sizes = j["hidden_sizes"].get<std::vector<std::size_t>>();
    if (j.contains("activation")) c.activation = activation_from_string(j["activation"].get<std::string>());
    if (j.contains("loss")) c.loss = loss_from_string(j["loss"].get<std::string>());
    if (j.contains("shuffle")) c.shuffle = j["shuffle"].get<bool>();
    if (j.contains("divergence_ceiling")) c.divergence_ceiling = j["divergence_ceiling"].get<double>();
    if (j.contains("selection")) c.selection = selection_from_string(j["selection"].get<std::string>());
    if (j.contains("selection_interval")) c.selection_interval = j["selection_interval"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("training config: ") + e.what());
  }
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json metadata;
  try {
    metadata = json::parse(ckpt.metadata.empty() ? "{}" : ckpt.metadata);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }
  json j = {{"format", "ivcert.checkpoint"},
            {"version", kCheckpointVersion},
            {"loss", to_string(ckpt.model.loss())},
            {"layers", interval_layers_to_json(ckpt.model)},
            {"config", config_json(ckpt.config)},
            {"train_eps", ckpt.train_eps},
            {"test_eps", ckpt.test_eps},
            {"dataset", ckpt.dataset},
            {"metadata", metadata}};
  write_json(path, j);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const json j = read_json(path);
  expect_format(j, "ivcert.checkpoint", path);
  try {
    const LossKind loss = loss_from_string(j.at("loss").get<std::string>());
    return Checkpoint{interval_model_from_json(j.at("layers"), loss),
                      config_from(j.at("config"), TrainConfig{}),
                      j.at("train_eps").get<double>(),
                      j.at("test_eps").get<double>(),
                      j.value("dataset", ""),
                      j.value("metadata", json::object()).dump()};
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_trace(const std::filesystem::path& path, const TrainTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"epoch", s.epoch},
                     {"lr", s.learning_rate},
                     {"loss_lower", s.loss.lower},
                     {"loss_upper", s.loss.upper},
                     {"max_radius", s.max_radius},
                     {"layer_radius", s.layer_radius}});
  }
  json j = {{"format", "ivcert.trace"},
            {"version", kCheckpointVersion},
            {"initial", point_model_to_json(trace.initial)},
            {"schedule", trace.schedule},
            {"steps", steps}};
  write_json(path, j);
}

TrainTrace load_trace(const std::filesystem::path& path) {
  const json j = read_json(path);
  expect_format(j, "ivcert.trace", path);
  try {
    TrainTrace trace;
    trace.initial = point_model_from_json(j.at("initial"));
    trace.schedule = j.at("schedule").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& s : j.at("steps")) {
      StepRecord rec;
      rec.epoch = s.at("epoch").get<std::size_t>();
      rec.learning_rate = s.at("lr").get<double>();
      rec.loss = {s.at("loss_lower").get<double>(), s.at("loss_upper").get<double>()};
      rec.max_radius = s.at("max_radius").get<double>();
      rec.layer_radius = s.at("layer_radius").get<std::vector<double>>();
      trace.steps.push_back(std::move(rec));
    }
    return trace;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig config_from_json(std::string_view text, TrainConfig defaults) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("training config: ") + e.what());
  }
  return config_from(j, std::move(defaults));
}

}  // namespace ivcert
