#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivcert {

enum class SplitTag { kAll, kTrain, kValidation, kTest };

std::string_view to_string(SplitTag tag);

/// Concrete labelled dataset: N x d features (row-major) and N labels.
struct Dataset {
  std::size_t num_features = 0;
  std::vector<double> features;
  std::vector<int> labels;
  SplitTag split = SplitTag::kAll;
  std::string provenance;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * num_features, num_features};
  }
  /// Largest label + 1 (at least 2).
  std::size_t num_classes() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  /// First `n` samples.
  Dataset head(std::size_t n) const;

  /// Throws DomainError on inconsistent sizes or non-finite features.
  void validate() const;
};

/// Two interleaved half circles with isotropic Gaussian noise. The upper arc
/// (label 0) is (cos t, sin t), the lower arc (label 1) is
/// (1 - cos t, 0.5 - sin t), t evenly spaced over [0, pi]; samples are shuffled.
Dataset gen_two_moons(std::size_t n, double noise_std, std::uint64_t seed);

// IDX files: big-endian magic (0x0000, type code, rank), big-endian u32
// dimensions, then raw data. Only unsigned-byte payloads are supported.

struct IdxArray {
  std::uint8_t type_code = 0x08;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::uint32_t magic() const {
    return (static_cast<std::uint32_t>(type_code) << 8) | static_cast<std::uint32_t>(dims.size());
  }
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx(const IdxArray& array);
IdxArray read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& array);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Loads an MNIST image/label pair; pixels are scaled to [0, 1].
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Keeps samples whose label is in `keep` and relabels them by position in
/// `keep` (e.g. {1, 7}: digit 1 -> 0, digit 7 -> 1). Order is preserved.
Dataset filter_classes(const Dataset& ds, std::span<const int> keep);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct DatasetSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Seeded disjoint partition. Throws DomainError if the sizes exceed N.
DatasetSplits split(const Dataset& ds, SplitSizes sizes, std::uint64_t seed);

// Plain CSV: header "x0,...,x{d-1},label", one sample per line, values
// printed with 17 significant digits so a round trip is exact.
void write_csv(const std::filesystem::path& path, const Dataset& ds);
Dataset read_csv(const std::filesystem::path& path, SplitTag tag = SplitTag::kAll);

}  // namespace ivcert
