#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "ivcert/data.hpp"
#include "ivcert/error.hpp"

using namespace ivcert;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ivcert_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

IdxArray tiny_images(std::uint32_t n) {
  IdxArray a;
  a.dims = {n, 2, 2};
  for (std::uint32_t i = 0; i < n * 4; ++i) a.data.push_back(static_cast<std::uint8_t>(i * 17 % 256));
  return a;
}

IdxArray tiny_labels(std::vector<std::uint8_t> labels) {
  IdxArray a;
  a.dims = {static_cast<std::uint32_t>(labels.size())};
  a.data = std::move(labels);
  return a;
}

}  // namespace

TEST(TwoMoons, SizesAndBalance) {
  const Dataset d = gen_two_moons(1400, 0.1, 0);
  EXPECT_EQ(d.size(), 1400u);
  EXPECT_EQ(d.num_features, 2u);
  EXPECT_EQ(d.num_classes(), 2u);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1), 700);
  EXPECT_NO_THROW(d.validate());
}

TEST(TwoMoons, NoiselessPointsLieOnArcs) {
  const Dataset d = gen_two_moons(200, 0.0, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = d.row(i)[0], y = d.row(i)[1];
    if (d.labels[i] == 0) {
      EXPECT_NEAR(x * x + y * y, 1.0, 1e-12);
      EXPECT_GE(y, -1e-12);
    } else {
      EXPECT_NEAR((1 - x) * (1 - x) + (0.5 - y) * (0.5 - y), 1.0, 1e-12);
      EXPECT_LE(y, 0.5 + 1e-12);
    }
  }
}

TEST(TwoMoons, DeterministicAndValidated) {
  EXPECT_EQ(gen_two_moons(100, 0.1, 4).features, gen_two_moons(100, 0.1, 4).features);
  EXPECT_NE(gen_two_moons(100, 0.1, 4).features, gen_two_moons(100, 0.1, 5).features);
  EXPECT_THROW(gen_two_moons(101, 0.1, 0), DomainError);
  EXPECT_THROW(gen_two_moons(0, 0.1, 0), DomainError);
  EXPECT_THROW(gen_two_moons(10, -1.0, 0), DomainError);
}

TEST(Idx, RoundTrip) {
  const IdxArray a = tiny_images(3);
  const auto bytes = encode_idx(a);
  ASSERT_EQ(bytes.size(), 4u + 3 * 4 + 12);
  EXPECT_EQ(bytes[2], 0x08);
  EXPECT_EQ(bytes[3], 3);
  const IdxArray b = parse_idx(bytes);
  EXPECT_EQ(b.dims, a.dims);
  EXPECT_EQ(b.data, a.data);
  EXPECT_EQ(b.magic(), kIdxImagesMagic);
}

TEST(Idx, CorruptInputs) {
  auto bytes = encode_idx(tiny_images(2));
  auto bad_magic = bytes;
  bad_magic[0] = 1;
  EXPECT_THROW(parse_idx(bad_magic), ParseError);
  auto bad_type = bytes;
  bad_type[2] = 0x0d;
  EXPECT_THROW(parse_idx(bad_type), ParseError);
  EXPECT_THROW(parse_idx(std::span(bytes).first(bytes.size() - 1)), ParseError);
  EXPECT_THROW(parse_idx(std::span(bytes).first(6)), ParseError);
  EXPECT_THROW(parse_idx(std::span(bytes).first(2)), ParseError);
  bytes.push_back(0);
  EXPECT_THROW(parse_idx(bytes), ParseError);
}

TEST(Mnist, LoadScalesPixelsAndChecksCounts) {
  const fs::path dir = temp_dir("mnist");
  write_idx(dir / "img", tiny_images(3));
  write_idx(dir / "lab", tiny_labels({1, 7, 3}));
  const Dataset d = load_mnist_idx(dir / "img", dir / "lab");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.num_features, 4u);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 7, 3}));
  for (double v : d.features) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_DOUBLE_EQ(d.features[1], 17.0 / 255.0);

  write_idx(dir / "lab2", tiny_labels({1, 7}));
  EXPECT_THROW(load_mnist_idx(dir / "img", dir / "lab2"), ParseError);
  EXPECT_THROW(load_mnist_idx(dir / "lab", dir / "img"), ParseError);
  EXPECT_THROW(load_mnist_idx(dir / "missing", dir / "lab"), ParseError);
  fs::remove_all(dir);
}

TEST(FilterClasses, RelabelsAndPreservesOrder) {
  Dataset d;
  d.num_features = 1;
  d.features = {0, 1, 2, 3, 4};
  d.labels = {7, 3, 1, 7, 1};
  const int keep[] = {1, 7};
  const Dataset f = filter_classes(d, keep);
  EXPECT_EQ(f.features, (std::vector<double>{0, 2, 3, 4}));
  EXPECT_EQ(f.labels, (std::vector<int>{1, 0, 1, 0}));

  const int none[] = {5};
  EXPECT_TRUE(filter_classes(d, none).empty());
  const int both[] = {0, 1};
  EXPECT_EQ(filter_classes(f, both).labels, f.labels);
}

TEST(Split, DisjointDeterministicAndBounded) {
  const Dataset d = gen_two_moons(100, 0.1, 0);
  const auto s = split(d, {60, 20, 20}, 3);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.validation.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(s.train.split, SplitTag::kTrain);
  EXPECT_EQ(s.test.split, SplitTag::kTest);

  std::set<std::pair<double, double>> seen;
  for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
    for (std::size_t i = 0; i < part->size(); ++i) seen.insert({part->row(i)[0], part->row(i)[1]});
  }
  EXPECT_EQ(seen.size(), 100u);

  EXPECT_EQ(split(d, {60, 20, 20}, 3).train.features, s.train.features);
  EXPECT_NE(split(d, {60, 20, 20}, 4).train.features, s.train.features);
  EXPECT_THROW(split(d, {60, 30, 20}, 3), DomainError);
}

TEST(Csv, ExactRoundTrip) {
  const fs::path dir = temp_dir("csv");
  Dataset d = gen_two_moons(20, 0.1, 2);
  d.features[0] = 1.0 / 3.0;
  write_csv(dir / "d.csv", d);
  const Dataset r = read_csv(dir / "d.csv", SplitTag::kTest);
  EXPECT_EQ(r.features, d.features);
  EXPECT_EQ(r.labels, d.labels);
  EXPECT_EQ(r.split, SplitTag::kTest);

  std::ofstream(dir / "bad.csv") << "x0,label\n0.5,abc\n";
  EXPECT_THROW(read_csv(dir / "bad.csv"), ParseError);
  std::ofstream(dir / "ragged.csv") << "x0,x1,label\n0.5,1\n";
  EXPECT_THROW(read_csv(dir / "ragged.csv"), ParseError);
  EXPECT_THROW(read_csv(dir / "missing.csv"), ParseError);
  fs::remove_all(dir);
}

TEST(Dataset, ValidateAndSubset) {
  Dataset d = gen_two_moons(10, 0.1, 0);
  const std::size_t rows[] = {3, 1};
  const Dataset s = d.subset(rows);
  EXPECT_EQ(s.labels, (std::vector<int>{d.labels[3], d.labels[1]}));
  EXPECT_EQ(d.head(4).size(), 4u);
  const std::size_t bad[] = {10};
  EXPECT_THROW(d.subset(bad), DomainError);
  d.features[0] = NAN;
  EXPECT_THROW(d.validate(), DomainError);
  d.features.pop_back();
  EXPECT_THROW(d.validate(), DomainError);
}
