#include "ivcert/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numbers>
#include <sstream>

#include "ivcert/error.hpp"
#include "ivcert/rng.hpp"

namespace ivcert {

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kAll:
      return "all";
    case SplitTag::kTrain:
      return "train";
    case SplitTag::kValidation:
      return "validation";
    case SplitTag::kTest:
      return "test";
  }
  return "unknown";
}

std::size_t Dataset::num_classes() const {
  int max_label = 1;
  for (int y : labels) max_label = std::max(max_label, y);
  return static_cast<std::size_t>(max_label) + 1;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_features = num_features;
  out.split = split;
  out.provenance = provenance;
  out.features.reserve(indices.size() * num_features);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DomainError("subset: index out of range");
    auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return subset(idx);
}

void Dataset::validate() const {
  if (features.size() != labels.size() * num_features) {
    throw DomainError("dataset: feature count does not match labels x features");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw DomainError("dataset: non-finite feature value");
  }
  for (int y : labels) {
    if (y < 0) throw DomainError("dataset: negative label");
  }
}

Dataset gen_two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) throw DomainError("gen_two_moons: n must be a positive even number");
  if (!(noise_std >= 0.0)) throw DomainError("gen_two_moons: noise_std must be non-negative");
  const std::size_t half = n / 2;
  Dataset ds;
  ds.num_features = 2;
  ds.features.resize(n * 2);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < half; ++i) {
    const double t = half > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1)
                              : 0.0;
    ds.features[2 * i] = std::cos(t);
    ds.features[2 * i + 1] = std::sin(t);
    ds.labels[i] = 0;
    const std::size_t j = half + i;
    ds.features[2 * j] = 1.0 - std::cos(t);
    ds.features[2 * j + 1] = 0.5 - std::sin(t);
    ds.labels[j] = 1;
  }
  Rng rng(seed);
  std::vector<std::size_t> order = rng.permutation(n);
  ds = ds.subset(order);
  if (noise_std > 0.0) {
    for (double& v : ds.features) v += noise_std * rng.normal();
  }
  std::ostringstream prov;
  prov << "two_moons(n=" << n << ", noise_std=" << noise_std << ", seed=" << seed << ")";
  ds.provenance = prov.str();
  return ds;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("idx: truncated header");
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("idx: bad magic number");
  IdxArray arr;
  arr.type_code = bytes[2];
  if (arr.type_code != 0x08) throw ParseError("idx: only unsigned byte payloads are supported");
  const std::size_t rank = bytes[3];
  if (rank == 0) throw ParseError("idx: rank must be positive");
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) throw ParseError("idx: truncated dimension table");
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    arr.dims.push_back(read_be32(bytes, 4 + 4 * d));
    count *= arr.dims.back();
  }
  if (bytes.size() < header + count) {
    throw ParseError("idx: truncated payload, expected " + std::to_string(count) + " bytes, found " +
                     std::to_string(bytes.size() - header));
  }
  if (bytes.size() > header + count) throw ParseError("idx: trailing bytes after payload");
  arr.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return arr;
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  std::size_t count = 1;
  for (auto d : array.dims) count *= d;
  if (count != array.data.size()) throw ShapeError("idx: dimensions do not match payload size");
  if (array.dims.empty() || array.dims.size() > 255) throw ShapeError("idx: invalid rank");
  std::vector<std::uint8_t> out{0, 0, array.type_code, static_cast<std::uint8_t>(array.dims.size())};
  for (auto d : array.dims) append_be32(out, d);
  out.insert(out.end(), array.data.begin(), array.data.end());
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  try {
    return parse_idx(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_idx(const std::filesystem::path& path, const IdxArray& array) {
  const auto bytes = encode_idx(array);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = read_idx(images);
  const IdxArray lab = read_idx(labels);
  if (img.magic() != kIdxImagesMagic) throw ParseError(images.string() + ": not an idx3 image file");
  if (lab.magic() != kIdxLabelsMagic) throw ParseError(labels.string() + ": not an idx1 label file");
  if (img.dims[0] != lab.dims[0]) {
    throw ParseError("mnist: " + std::to_string(img.dims[0]) + " images but " +
                     std::to_string(lab.dims[0]) + " labels");
  }
  Dataset ds;
  ds.num_features = static_cast<std::size_t>(img.dims[1]) * img.dims[2];
  ds.features.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) ds.features[i] = img.data[i] / 255.0;
  ds.labels.assign(lab.data.begin(), lab.data.end());
  ds.provenance = "mnist(" + images.filename().string() + ", " + labels.filename().string() + ")";
  return ds;
}

Dataset filter_classes(const Dataset& ds, std::span<const int> keep) {
  std::vector<std::size_t> idx;
  std::vector<int> relabel;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = std::find(keep.begin(), keep.end(), ds.labels[i]);
    if (it != keep.end()) {
      idx.push_back(i);
      relabel.push_back(static_cast<int>(it - keep.begin()));
    }
  }
  Dataset out = ds.subset(idx);
  out.labels = std::move(relabel);
  std::ostringstream prov;
  prov << ds.provenance << " | classes{";
  for (std::size_t k = 0; k < keep.size(); ++k) prov << (k ? "," : "") << keep[k];
  prov << '}';
  out.provenance = prov.str();
  return out;
}

DatasetSplits split(const Dataset& ds, SplitSizes sizes, std::uint64_t seed) {
  const std::size_t total = sizes.train + sizes.validation + sizes.test;
  if (total > ds.size()) {
    throw DomainError("split: requested " + std::to_string(total) + " samples from a dataset of " +
                      std::to_string(ds.size()));
  }
  Rng rng(Rng::derive(seed, 0x5b17));
  const std::vector<std::size_t> order = rng.permutation(ds.size());
  auto take = [&](std::size_t begin, std::size_t n, SplitTag tag) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(begin + n));
    Dataset part = ds.subset(idx);
    part.split = tag;
    return part;
  };
  DatasetSplits out;
  out.train = take(0, sizes.train, SplitTag::kTrain);
  out.validation = take(sizes.train, sizes.validation, SplitTag::kValidation);
  out.test = take(sizes.train + sizes.validation, sizes.test, SplitTag::kTest);
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (std::size_t j = 0; j < ds.num_features; ++j) out << 'x' << j << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) out << v << ',';
    out << ds.labels[i] << '\n';
  }
}

Dataset read_csv(const std::filesystem::path& path, SplitTag tag) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw ParseError(path.string() + ": need at least one feature and a label");
  Dataset ds;
  ds.num_features = columns - 1;
  ds.split = tag;
  ds.provenance = path.filename().string();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      try {
        if (col + 1 < columns) {
          ds.features.push_back(std::stod(cell));
        } else if (col + 1 == columns) {
          ds.labels.push_back(std::stoi(cell));
        }
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      ++col;
    }
    if (col != columns) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " columns");
    }
  }
  ds.validate();
  return ds;
}

}  // namespace ivcert
