#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ivcert/checkpoint.hpp"
#include "ivcert/error.hpp"
#include "ivcert/experiment.hpp"

using namespace ivcert;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "ivcert_test_checkpoint";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Checkpoint, RoundTrip) {
  const fs::path dir = temp_dir();
  TrainConfig c;
  c.hidden_sizes = {4, 3};
  c.learning_rate = 0.1 / 3;
  c.activation = ActivationKind::kSigmoid;
  c.selection = ModelSelection::kLast;
  const Dataset d = gen_two_moons(40, 0.1, 0);
  const auto run = train_certified(init_point_model(make_architecture(c, 2, 2), 3), {d, 1e-3, 1e-3}, c);

  Checkpoint ck{run.model, c, 1e-3, 2e-3, "two-moons", R"({"note":"x"})"};
  save_checkpoint(dir / "m.json", ck);
  const Checkpoint back = load_checkpoint(dir / "m.json");
  EXPECT_EQ(back.model.flat_parameters(), run.model.flat_parameters());
  EXPECT_EQ(back.model.loss(), run.model.loss());
  EXPECT_EQ(back.model.layers().size(), run.model.layers().size());
  EXPECT_EQ(config_to_json(back.config), config_to_json(c));
  EXPECT_EQ(back.train_eps, 1e-3);
  EXPECT_EQ(back.test_eps, 2e-3);
  EXPECT_EQ(back.dataset, "two-moons");
  EXPECT_NE(back.metadata.find("note"), std::string::npos);

  save_trace(dir / "t.json", run.trace);
  const TrainTrace t = load_trace(dir / "t.json");
  EXPECT_EQ(t.schedule, run.trace.schedule);
  EXPECT_EQ(t.steps, run.trace.steps);
  EXPECT_EQ(t.initial.flat_parameters(), run.trace.initial.flat_parameters());
  fs::remove_all(dir);
}

TEST(Checkpoint, RejectsBadFiles) {
  const fs::path dir = temp_dir();
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), ParseError);
  std::ofstream(dir / "garbage.json") << "{not json";
  EXPECT_THROW(load_checkpoint(dir / "garbage.json"), ParseError);

  TrainConfig c;
  const auto m = lift_to_interval(init_point_model(make_architecture(c, 2, 2), 0));
  save_checkpoint(dir / "ok.json", {m, c, 0, 0, "two-moons"});
  std::string text = slurp(dir / "ok.json");
  const std::string key = "\"version\":1";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, key.size(), "\"version\":99");
  std::ofstream(dir / "v99.json") << text;
  EXPECT_THROW(load_checkpoint(dir / "v99.json"), ParseError);
  EXPECT_THROW(load_trace(dir / "ok.json"), ParseError);
  fs::remove_all(dir);
}

TEST(ConfigJson, OverlayAndErrors) {
  const TrainConfig c = config_from_json(R"({"learning_rate": 0.5, "hidden_sizes": [7, 7], "loss": "cross_entropy"})");
  EXPECT_EQ(c.learning_rate, 0.5);
  EXPECT_EQ(c.hidden_sizes, (std::vector<std::size_t>{7, 7}));
  EXPECT_EQ(c.loss, LossKind::kCrossEntropy);
  EXPECT_EQ(c.batch_size, TrainConfig{}.batch_size);

  TrainConfig base;
  base.batch_size = 13;
  EXPECT_EQ(config_from_json("{}", base).batch_size, 13u);
  EXPECT_THROW(config_from_json(R"({"learning_rat": 0.5})"), ParseError);
  EXPECT_THROW(config_from_json(R"({"batch_size": "big"})"), ParseError);
  EXPECT_THROW(config_from_json(R"({"activation": "tanh"})"), ParseError);
  EXPECT_THROW(config_from_json("[1, 2]"), ParseError);
}

TEST(Experiment, DatasetNamesAndDefaults) {
  EXPECT_EQ(dataset_from_string(to_string(DatasetKind::kTwoMoons)), DatasetKind::kTwoMoons);
  EXPECT_EQ(dataset_from_string(to_string(DatasetKind::kMnist17)), DatasetKind::kMnist17);
  EXPECT_THROW(dataset_from_string("cifar"), ParseError);
  EXPECT_EQ(default_train_config(DatasetKind::kTwoMoons).learning_rate, 0.01);
  EXPECT_EQ(default_train_config(DatasetKind::kMnist17).learning_rate, 0.05);
  EXPECT_EQ(default_train_config(DatasetKind::kMnist17).batch_size, 100u);
  EXPECT_EQ(default_eps(DatasetKind::kTwoMoons), 1e-3);
  EXPECT_EQ(default_eps(DatasetKind::kMnist17), 1e-4);
}

TEST(Experiment, TwoMoonsSplitsAndRun) {
  const DatasetSplits s = load_dataset({});
  EXPECT_EQ(s.train.size(), 1000u);
  EXPECT_EQ(s.validation.size(), 200u);
  EXPECT_EQ(s.test.size(), 200u);
  EXPECT_EQ(load_dataset({}).train.features, s.train.features);

  RunSetup setup;
  setup.config = default_train_config(DatasetKind::kTwoMoons);
  setup.config.max_epochs = 3;
  const RunResult r = run_experiment(s, setup);
  ASSERT_TRUE(r.model.has_value());
  EXPECT_EQ(r.trace.steps.size(), 30u);
  EXPECT_GE(r.selected_step, 1u);
  EXPECT_EQ(r.test_certified_accuracy, r.test_certificates->certified_accuracy);
  EXPECT_GE(r.clean_test_accuracy, r.test_certified_accuracy);
}

TEST(Experiment, MissingMnistIsAnError) {
  DataOptions o;
  o.kind = DatasetKind::kMnist17;
  o.data_dir = fs::temp_directory_path() / "ivcert_no_such_dir";
  EXPECT_THROW(load_dataset(o), ParseError);
}
