#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "somsam/pq.hpp"
#include "somsam/sam.hpp"
#include "somsam/som.hpp"

namespace somsam {

/// Labeled feature vectors, stored row-major.
struct FeatureSet {
  std::uint32_t dim = 0;
  std::vector<ClassId> labels;
  std::vector<float> values;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  RowsView view() const { return {values.data(), size(), dim, dim}; }

  void push_back(ClassId label, std::span<const float> vector);
  /// Number of distinct labels present.
  std::uint32_t distinct_labels() const;
  /// 1 + the largest label, 0 when empty.
  std::uint32_t label_bound() const;
  /// Records whose label is in `keep`, in original order.
  FeatureSet filter(std::span<const ClassId> keep) const;

  /// Throws ContractError on inconsistent sizes or non-finite components.
  void validate() const;

  bool operator==(const FeatureSet&) const = default;
};

// FVB layout, all integers little-endian:
//   0   "FVB1"
//   4   u32 version (1)
//   8   u32 dim
//   12  u32 record count
//   16  u32 distinct labels (0 = unknown)
//   20  records: u32 label, then dim x binary32
inline constexpr std::uint32_t kFvbVersion = 1;
inline constexpr std::size_t kFvbHeaderBytes = 20;

std::vector<std::uint8_t> encode_features(const FeatureSet& set);
FeatureSet decode_features(std::span<const std::uint8_t> bytes);

void write_features(const FeatureSet& set, std::ostream& out);
void write_features(const FeatureSet& set, const std::filesystem::path& path);
FeatureSet read_features(std::istream& in);
FeatureSet read_features(const std::filesystem::path& path);

struct NormalizeResult {
  FeatureSet set;
  std::size_t skipped_zero = 0;
};

/// Scales every nonzero vector to unit L2 norm; zero vectors pass through and
/// are counted.
NormalizeResult l2_normalize(FeatureSet set);

struct SyntheticSpec {
  std::uint32_t num_classes = 10;
  std::uint32_t dim = 64;
  std::uint32_t samples_per_class = 50;
  double cluster_spread = 0.05;
  std::uint64_t seed = 0;
};

/// Class c draws its center uniformly from [0,1)^dim, then its samples as
/// center + N(0, spread^2) per component, all from one stream. Records are
/// grouped by class.
FeatureSet generate_synthetic(const SyntheticSpec& spec);

/// Splits each class's records: the first `train_per_class` go to the first
/// set, the rest to the second.
std::pair<FeatureSet, FeatureSet> split_per_class(const FeatureSet& set,
                                                  std::size_t train_per_class);

/// CRC-32 (IEEE 802.3 polynomial, as in zlib).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

struct Model {
  ProductQuantizer quantizer;
  AssociativeClassifier classifier;

  bool operator==(const Model&) const = default;
};

inline constexpr std::uint32_t kModelVersion = 1;

std::vector<std::uint8_t> encode_model(const Model& model);
Model decode_model(std::span<const std::uint8_t> bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace somsam
