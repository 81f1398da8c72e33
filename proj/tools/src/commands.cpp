#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "ivcert/certifier.hpp"
#include "ivcert/checkpoint.hpp"
#include "ivcert/concrete.hpp"
#include "ivcert/error.hpp"
#include "ivcert/oracle.hpp"
#include "ivcert/rng.hpp"

namespace ivcert::cli {

namespace fs = std::filesystem;

namespace {

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ParseError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

json read_config_file(const Overrides& flags) {
  return flags.config_path ? read_json_file(*flags.config_path) : json::object();
}

json dataset_summary(const Dataset& d) {
  std::vector<std::size_t> counts(d.empty() ? 0 : d.num_classes(), 0);
  for (int y : d.labels) ++counts[static_cast<std::size_t>(y)];
  return {{"samples", d.size()}, {"features", d.num_features}, {"class_counts", counts}};
}

json splits_summary(const DatasetSplits& s) {
  return {{"train", dataset_summary(s.train)},
          {"validation", dataset_summary(s.validation)},
          {"test", dataset_summary(s.test)}};
}

json certification_json(const CertificationResult& r) {
  return {{"test_eps", r.test_eps},
          {"samples", r.samples.size()},
          {"certified_accuracy", r.certified_accuracy},
          {"certified_correct", r.certified_correct},
          {"certified_wrong", r.certified_wrong},
          {"not_certified", r.not_certified}};
}

// Dataset settings recorded in a checkpoint, overridable from flags.
DataOptions data_options_for(const Checkpoint& ck, const Overrides& flags) {
  DataOptions o;
  try {
    o.kind = dataset_from_string(flags.dataset ? *flags.dataset : ck.dataset);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  const json meta = json::parse(ck.metadata);
  o.seed = meta.value("data_seed", std::uint64_t{0});
  o.noise_std = meta.value("noise_std", 0.1);
  if (flags.data_seed) o.seed = *flags.data_seed;
  if (flags.data_dir) o.data_dir = *flags.data_dir;
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_gen_data(const Overrides& flags, const std::string& out) {
  const RunConfig c = resolve(flags, read_config_file(flags));
  const DatasetSplits s = load_dataset(c.data);
  json j = {{"command", "gen-data"},
            {"dataset", to_string(c.data.kind)},
            {"data_seed", c.data.seed},
            {"splits", splits_summary(s)}};
  if (c.data.kind == DatasetKind::kTwoMoons) {
    const fs::path dir = prepare_dir(
        out.empty() ? (c.data.data_dir / ("two-moons-seed" + std::to_string(c.data.seed))).string() : out);
    write_csv(dir / "train.csv", s.train);
    write_csv(dir / "validation.csv", s.validation);
    write_csv(dir / "test.csv", s.test);
    j["noise_std"] = c.data.noise_std;
    j["out"] = dir.string();
  } else {
    j["source"] = (c.data.data_dir / "mnist").string();
  }
  emit(j);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_fetch_mnist(const Overrides& flags, const std::string& from_dir) {
  const fs::path data_dir = flags.data_dir ? fs::path(*flags.data_dir) : default_data_dir();
  const fs::path target = data_dir / "mnist";
  const char* names[] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                         "t10k-labels-idx1-ubyte"};
  json copied = json::array();
  if (!from_dir.empty()) {
    fs::create_directories(target);
    for (const char* name : names) {
      // Accept both the canonical names and the common "train-images.idx3-ubyte" spelling.
      std::string alt = name;
      alt[alt.find("-idx")] = '.';
      fs::path src = fs::path(from_dir) / name;
      if (!fs::exists(src)) src = fs::path(from_dir) / alt;
      if (!fs::exists(src)) throw ParseError("missing " + (fs::path(from_dir) / name).string());
      fs::copy_file(src, target / name, fs::copy_options::overwrite_existing);
      copied.push_back(src.string());
    }
  }
  for (const char* name : names) {
    if (!fs::exists(target / name)) {
      throw ParseError("MNIST file " + (target / name).string() +
                       " not found; download the four uncompressed IDX files and rerun with --from-dir DIR");
    }
  }
  const Dataset train = load_mnist_idx(target / names[0], target / names[1]);
  const Dataset test = load_mnist_idx(target / names[2], target / names[3]);
  if (train.size() != 60000 || test.size() != 10000 || train.num_features != 784) {
    throw ParseError("unexpected MNIST sizes: " + std::to_string(train.size()) + " train / " +
                     std::to_string(test.size()) + " test images");
  }
  const int keep[] = {1, 7};
  json files = json::object();
  for (const char* name : names) files[name] = fs::file_size(target / name);
  emit({{"command", "fetch-mnist"},
        {"dir", target.string()},
        {"copied", copied},
        {"files", files},
        {"train_images", train.size()},
        {"test_images", test.size()},
        {"train_1_7", filter_classes(train, keep).size()},
        {"test_1_7", filter_classes(test, keep).size()}});
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_train(const Overrides& flags, const std::string& out) {
  const RunConfig c = resolve(flags, read_config_file(flags));
  const fs::path dir = prepare_dir(out);
  const json resolved = to_json(c);
  write_text(dir / "config.json", resolved.dump(2) + "\n");

  const DatasetSplits data = load_dataset(c.data);
  const RunResult r = run_experiment(data, c.run);

  save_trace(dir / "trace.json", r.trace);
  json artifacts = {{"config", (dir / "config.json").string()}, {"trace", (dir / "trace.json").string()}};
  json metrics = {{"command", "train"},
                  {"status", to_string(r.status)},
                  {"message", r.message},
                  {"dataset", to_string(c.data.kind)},
                  {"config", resolved},
                  {"steps", r.trace.steps.size()},
                  {"selected_step", r.selected_step},
                  {"pretrain_validation_accuracy", r.pretrain_validation_accuracy},
                  {"start_certified_accuracy", r.start_certified_accuracy},
                  {"seconds", r.seconds}};
  if (r.model) {
    const json meta = {{"data_seed", c.data.seed},
                       {"noise_std", c.data.noise_std},
                       {"selected_step", r.selected_step},
                       {"status", to_string(r.status)}};
    save_checkpoint(dir / "checkpoint.json",
                    {*r.model, c.run.config, c.run.train_eps, c.run.test_eps,
                     std::string(to_string(c.data.kind)), meta.dump()});
    std::ofstream csv(dir / "certificates.csv");
    write_certificates_csv(csv, *r.test_certificates);
    artifacts["checkpoint"] = (dir / "checkpoint.json").string();
    artifacts["certificates"] = (dir / "certificates.csv").string();
    metrics["clean_test_accuracy"] = r.clean_test_accuracy;
    metrics["validation_certified_accuracy"] = r.validation_certified_accuracy;
    metrics["test_certified_accuracy"] = r.test_certified_accuracy;
    metrics["test"] = certification_json(*r.test_certificates);
    metrics["max_parameter_radius"] = r.model->max_parameter_radius();
  }
  metrics["artifacts"] = artifacts;
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  emit(metrics);
  return r.model ? kExitOk : kExitDiverged;
}

// ---------------------------------------------------------------------------

namespace {

struct Cell {
  double eps = 0.0;
  double lr = 0.0;
  std::size_t batch = 0;
  std::size_t width = 0;
  std::optional<double> pretrain;
};

struct Row {
  std::size_t cell = 0;
  std::uint64_t seed = 0;
  std::string status = "pending";
  std::string message;
  bool has_model = false;
  double pretrain_validation = 0.0;
  double start = 0.0;
  double certified = 0.0;
  double validation_certified = 0.0;
  double clean = 0.0;
  std::size_t steps = 0;
  std::size_t selected_step = 0;
  double seconds = 0.0;
};

template <typename T>
std::vector<T> axis(const std::vector<T>& flag, const json& grid, const char* key, T base) {
  if (!flag.empty()) return flag;
  if (grid.contains(key)) {
    try {
      auto v = grid.at(key).get<std::vector<T>>();
      if (v.empty()) throw ConfigError(std::string("grid axis '") + key + "' is empty");
      return v;
    } catch (const json::exception&) {
      throw ConfigError(std::string("grid axis '") + key + "' must be a list of numbers");
    }
  }
  return {base};
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace

int cmd_sweep(const Overrides& flags, SweepOptions o) {
  const json file = read_config_file(flags);
  const RunConfig base = resolve(flags, file, {"grid", "seeds"});
  const json grid = file.value("grid", json::object());
  if (!grid.is_object()) throw ConfigError("config key 'grid' must be an object");
  for (const auto& [key, value] : grid.items()) {
    if (key != "eps" && key != "learning_rate" && key != "batch_size" && key != "width" &&
        key != "pretrain_target") {
      throw ConfigError("unknown grid axis '" + key + "'");
    }
  }
  std::size_t seeds = 10;
  if (file.contains("seeds")) seeds = file.at("seeds").get<std::size_t>();
  if (o.seeds) seeds = *o.seeds;
  if (seeds == 0) throw ConfigError("--seeds must be positive");

  const auto eps = axis(o.eps, grid, "eps", base.run.train_eps);
  const auto lr = axis(o.lr, grid, "learning_rate", base.run.config.learning_rate);
  const auto batch = axis(o.batch, grid, "batch_size", base.run.config.batch_size);
  const auto width = axis(o.width, grid, "width", base.run.config.hidden_sizes.front());
  std::vector<std::optional<double>> pretrain;
  if (!o.pretrain.empty() || grid.contains("pretrain_target")) {
    for (double t : axis(o.pretrain, grid, "pretrain_target", 0.0)) {
      if (t < 0.5 || t > 1.0) throw ConfigError("pretrain targets must lie in [0.5, 1]");
      pretrain.emplace_back(t);
    }
  } else {
    pretrain.push_back(base.run.pretrain_target);
  }
  for (double v : eps) if (v < 0) throw ConfigError("eps grid values must be non-negative");
  for (double v : lr) if (!(v > 0)) throw ConfigError("learning rates must be positive");
  for (auto v : batch) if (v == 0) throw ConfigError("batch sizes must be positive");
  for (auto v : width) if (v == 0) throw ConfigError("widths must be positive");

  std::vector<Cell> cells;
  for (double e : eps)
    for (double l : lr)
      for (std::size_t b : batch)
        for (std::size_t w : width)
          for (const auto& p : pretrain) cells.push_back({e, l, b, w, p});

  const fs::path dir = prepare_dir(o.out);
  json resolved = to_json(base);
  resolved["grid"] = {{"eps", eps}, {"learning_rate", lr}, {"batch_size", batch}, {"width", width}};
  if (pretrain.front()) {
    std::vector<double> targets;
    for (const auto& p : pretrain) targets.push_back(*p);
    resolved["grid"]["pretrain_target"] = targets;
  }
  resolved["seeds"] = seeds;
  write_text(dir / "sweep_config.json", resolved.dump(2) + "\n");

  const DatasetSplits data = load_dataset(base.data);
  std::vector<Row> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t s = 0; s < seeds; ++s) {
      Row row;
      row.cell = c;
      row.seed = base.run.config.seed + s;
      rows.push_back(row);
    }
  }

  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs ? o.jobs : std::thread::hardware_concurrency(),
                                                        static_cast<unsigned>(rows.size())));
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      Row& row = rows[i];
      const Cell& cell = cells[row.cell];
      RunSetup setup = base.run;
      setup.train_eps = setup.test_eps = cell.eps;
      setup.config.learning_rate = cell.lr;
      setup.config.batch_size = cell.batch;
      setup.config.hidden_sizes.assign(base.run.config.hidden_sizes.size(), cell.width);
      setup.config.seed = row.seed;
      setup.pretrain_target = cell.pretrain;
      try {
        const RunResult r = run_experiment(data, setup);
        row.status = to_string(r.status);
        row.message = r.message;
        row.has_model = r.model.has_value();
        row.pretrain_validation = r.pretrain_validation_accuracy;
        row.start = r.start_certified_accuracy;
        row.certified = r.test_certified_accuracy;
        row.validation_certified = r.validation_certified_accuracy;
        row.clean = r.clean_test_accuracy;
        row.steps = r.trace.steps.size();
        row.selected_step = r.selected_step;
        row.seconds = r.seconds;
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
      std::lock_guard lock(log_mutex);
      std::cerr << "[" << (i + 1) << "/" << rows.size() << "] eps=" << fmt(cell.eps) << " lr=" << fmt(cell.lr)
                << " batch=" << cell.batch << " width=" << cell.width << " seed=" << row.seed << " -> "
                << row.status << " " << fmt(row.certified) << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  auto quote = [](std::string s) {
    std::replace(s.begin(), s.end(), '"', '\'');
    return "\"" + s + "\"";
  };
  std::ofstream runs(dir / "runs.csv");
  runs << "cell,seed,eps,lr,batch,width,pretrain_target,status,has_model,pretrain_validation_accuracy,"
          "start_certified_accuracy,certified_accuracy,validation_certified_accuracy,clean_accuracy,steps,"
          "selected_step,runtime_s,message\n";
  for (const Row& r : rows) {
    const Cell& c = cells[r.cell];
    runs << r.cell << ',' << r.seed << ',' << fmt(c.eps) << ',' << fmt(c.lr) << ',' << c.batch << ',' << c.width
         << ',' << (c.pretrain ? fmt(*c.pretrain) : "") << ',' << r.status << ',' << r.has_model << ','
         << fmt(r.pretrain_validation) << ',' << fmt(r.start) << ',' << fmt(r.certified) << ','
         << fmt(r.validation_certified) << ',' << fmt(r.clean) << ',' << r.steps << ',' << r.selected_step << ','
         << fmt(r.seconds) << ',' << quote(r.message) << '\n';
  }

  std::ofstream summary(dir / "summary.csv");
  summary << "cell,eps,lr,batch,width,pretrain_target,runs,errors,mean_certified_accuracy,"
             "std_certified_accuracy,mean_start_certified_accuracy,mean_runtime_s\n";
  json cell_json = json::array();
  std::size_t errors = 0;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    std::vector<double> acc, start, secs;
    std::size_t errs = 0;
    for (const Row& r : rows) {
      if (r.cell != ci) continue;
      if (r.status == "error") {
        ++errs;
        continue;
      }
      acc.push_back(r.certified);
      start.push_back(r.start);
      secs.push_back(r.seconds);
    }
    errors += errs;
    const auto [m, sd] = mean_std(acc);
    const double ms = mean_std(start).first;
    const double mt = mean_std(secs).first;
    const Cell& c = cells[ci];
    summary << ci << ',' << fmt(c.eps) << ',' << fmt(c.lr) << ',' << c.batch << ',' << c.width << ','
            << (c.pretrain ? fmt(*c.pretrain) : "") << ',' << acc.size() << ',' << errs << ',' << fmt(m) << ','
            << fmt(sd) << ',' << fmt(ms) << ',' << fmt(mt) << '\n';
    json cj = {{"eps", c.eps}, {"lr", c.lr}, {"batch", c.batch}, {"width", c.width},
               {"runs", acc.size()}, {"errors", errs}, {"mean_certified_accuracy", m},
               {"std_certified_accuracy", sd}, {"mean_start_certified_accuracy", ms}};
    if (c.pretrain) cj["pretrain_target"] = *c.pretrain;
    cell_json.push_back(cj);
  }

  json artifacts = {{"runs", (dir / "runs.csv").string()},
                    {"summary", (dir / "summary.csv").string()},
                    {"config", (dir / "sweep_config.json").string()}};
  if (pretrain.front()) {
    // One point per run: starting certified accuracy vs final certified accuracy.
    std::ofstream plot(dir / "pretrain.csv");
    plot << "pretrain_target,seed,pretrain_validation_accuracy,start_certified_accuracy,final_certified_accuracy\n";
    for (const Row& r : rows) {
      if (r.status == "error") continue;
      plot << fmt(*cells[r.cell].pretrain) << ',' << r.seed << ',' << fmt(r.pretrain_validation) << ','
           << fmt(r.start) << ',' << fmt(r.certified) << '\n';
    }
    artifacts["pretrain"] = (dir / "pretrain.csv").string();
  }
  emit({{"command", "sweep"},
        {"dataset", to_string(base.data.kind)},
        {"runs", rows.size()},
        {"errors", errors},
        {"jobs", jobs},
        {"cells", cell_json},
        {"artifacts", artifacts}});
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_certify(const Overrides& flags, const CertifyOptions& o) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const double eps = flags.eps_test ? *flags.eps_test : flags.eps ? *flags.eps : ck.test_eps;
  if (eps < 0) throw ConfigError("--eps-test must be non-negative");

  Dataset data;
  std::string source;
  if (!o.data_csv.empty()) {
    data = read_csv(o.data_csv);
    source = o.data_csv;
  } else {
    const DatasetSplits s = load_dataset(data_options_for(ck, flags));
    if (o.split == "test") {
      data = s.test;
    } else if (o.split == "validation") {
      data = s.validation;
    } else if (o.split == "train") {
      data = s.train;
    } else {
      throw ConfigError("--split must be train, validation or test");
    }
    source = o.split;
  }
  const CertificationResult r = certified_accuracy(ck.model, data, eps);
  json j = {{"command", "certify"},
            {"checkpoint", o.checkpoint},
            {"data", source},
            {"clean_accuracy", concrete_accuracy(extract_center(ck.model), data)},
            {"result", certification_json(r)}};
  if (!o.out.empty()) {
    const fs::path dir = prepare_dir(o.out);
    std::ofstream csv(dir / "certificates.csv");
    write_certificates_csv(csv, r);
    j["certificates"] = (dir / "certificates.csv").string();
    write_text(dir / "certify.json", j.dump(2) + "\n");
  }
  emit(j);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_oracle(const Overrides& flags, const OracleOptions& o) {
  TrainTrace trace;
  TrainConfig config;
  DataOptions data_options;
  double train_eps = 0.0, test_eps = 0.0;
  std::string origin;

  const std::string ck_path =
      !o.checkpoint.empty() ? o.checkpoint : o.run_dir.empty() ? "" : (fs::path(o.run_dir) / "checkpoint.json").string();
  const std::string trace_path =
      !o.trace.empty() ? o.trace : o.run_dir.empty() ? "" : (fs::path(o.run_dir) / "trace.json").string();
  if (!ck_path.empty()) {
    if (trace_path.empty()) throw ConfigError("oracle needs --trace (or --run) alongside --checkpoint");
    const Checkpoint ck = load_checkpoint(ck_path);
    trace = load_trace(trace_path);
    config = ck.config;
    data_options = data_options_for(ck, flags);
    train_eps = ck.train_eps;
    test_eps = ck.test_eps;
    origin = ck_path;
  } else {
    // No saved run: train one from flags/config and check it.
    const RunConfig c = resolve(flags, read_config_file(flags));
    config = c.run.config;
    data_options = c.data;
    train_eps = c.run.train_eps;
    test_eps = c.run.test_eps;
    const DatasetSplits data = load_dataset(c.data);
    const PointModel init = init_point_model(
        make_architecture(config, data.train.num_features, data.train.num_classes()),
        Rng::derive(config.seed, 0x1417));
    trace = train_selected(init, {data.train, train_eps, test_eps}, data.validation, config).trace;
    origin = "fresh run";
  }

  const DatasetSplits data = load_dataset(data_options);
  ReplayOptions ro;
  ro.samples = o.samples;
  ro.seed = o.seed;
  ro.rel_slack = o.rel_slack;
  ro.corrupt_step = o.corrupt_step;
  if (o.probe) ro.probe = &data.test;
  const ReplayReport rep = replay_containment(trace, {data.train, train_eps, test_eps}, config, ro);

  json replay = {{"samples", rep.samples},       {"steps", rep.steps},
                 {"checks", rep.checks},         {"violations", rep.violations},
                 {"worst_margin", rep.worst_margin}, {"rel_slack", rep.rel_slack},
                 {"trace_consistent", rep.trace_consistent}, {"passed", rep.passed()}};
  if (rep.first_violation) {
    const Violation& v = *rep.first_violation;
    replay["first_violation"] = {{"sample", v.sample},  {"step", v.step},   {"quantity", v.quantity},
                                 {"index", v.index},    {"value", v.value}, {"lower", v.bounds.lower},
                                 {"upper", v.bounds.upper}, {"margin", v.margin}};
  }
  const std::size_t decreases = trace.radius_decreases();
  bool passed = rep.passed() && decreases == 0;
  json j = {{"command", "oracle"},
            {"source", origin},
            {"train_eps", train_eps},
            {"replay", replay},
            {"radius_decreases", decreases}};
  if (o.finite_diff && !trace.schedule.empty()) {
    const Dataset batch = data.train.subset(trace.schedule.front());
    const FiniteDiffReport fd = finite_diff_check(trace.initial, batch);
    const bool ok = fd.max_rel_error < 1e-4;
    passed = passed && ok;
    j["finite_diff"] = {{"max_rel_error", fd.max_rel_error}, {"checked", fd.checked},
                        {"skipped", fd.skipped}, {"passed", ok}};
  }
  j["passed"] = passed;
  if (!o.out.empty()) write_text(prepare_dir(o.out) / "oracle.json", j.dump(2) + "\n");
  emit(j);
  return passed ? kExitOk : kExitOracle;
}

}  // namespace ivcert::cli
