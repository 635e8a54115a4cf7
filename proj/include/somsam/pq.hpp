#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "somsam/som.hpp"

namespace somsam {

/// Output of a product quantizer: the active neuron of each of the k SOMs.
/// Densely this is a kN-bit vector with ones at j*N + indices[j].
struct SparseCode {
  std::uint32_t n_per_som = 0;
  std::vector<std::uint32_t> indices;

  std::size_t k() const noexcept { return indices.size(); }
  /// Column of the active bit for block j.
  std::size_t column(std::size_t j) const { return j * n_per_som + indices[j]; }
  std::vector<std::uint8_t> dense() const;

  /// Throws ShapeError unless the code has k blocks of n_per_som neurons and
  /// every index lies in its block.
  void validate(std::size_t k, std::size_t n_per_som) const;

  bool operator==(const SparseCode&) const = default;
};

/// Contiguous split of x into k equal subvectors.
std::vector<std::span<const float>> split(std::span<const float> x, std::size_t k);

class ProductQuantizer {
 public:
  /// `config` is the resolved training configuration the SOMs were built with;
  /// it is kept for persistence.
  ProductQuantizer(SomTrainConfig config, std::vector<Som> soms);

  std::size_t k() const noexcept { return soms_.size(); }
  std::size_t subdim() const noexcept { return soms_.front().dim(); }
  std::size_t input_dim() const noexcept { return k() * subdim(); }
  std::uint32_t n_per_som() const noexcept {
    return static_cast<std::uint32_t>(soms_.front().size());
  }
  const GridTopology& grid() const noexcept { return soms_.front().grid(); }
  const SomTrainConfig& config() const noexcept { return config_; }
  const std::vector<Som>& soms() const noexcept { return soms_; }

  SparseCode quantize(std::span<const float> x) const;

  bool operator==(const ProductQuantizer&) const = default;

 private:
  SomTrainConfig config_;
  std::vector<Som> soms_;
};

/// Seed of SOM j: mix_seed(seed, j).
std::uint64_t som_seed(std::uint64_t seed, std::size_t j);

/// Trains SOM j on the j-th subvectors of `data`. `grid` fixes N; each SOM
/// gets its own stream seeded with som_seed(config.seed, j).
ProductQuantizer train_pq(const SomTrainConfig& config, std::size_t k, const GridTopology& grid,
                          const RowsView& data);
ProductQuantizer train_pq(const SomTrainConfig& config, std::size_t k, std::uint32_t n_per_som,
                          const RowsView& data);

}  // namespace somsam
