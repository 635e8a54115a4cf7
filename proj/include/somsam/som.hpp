#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "somsam/rng.hpp"

namespace somsam {

/// Read-only view over `rows` vectors of `cols` floats, consecutive rows
/// `stride` floats apart. Lets a SOM train on one subspace of wider records
/// without copying.
struct RowsView {
  const float* base = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  static RowsView dense(std::span<const float> values, std::size_t cols) {
    return {values.data(), cols == 0 ? 0 : values.size() / cols, cols, cols};
  }

  std::span<const float> row(std::size_t i) const { return {base + i * stride, cols}; }
};

/// 2-D rectangular grid; neuron i sits at (i / cols, i % cols).
struct GridTopology {
  std::uint32_t rows = 1;
  std::uint32_t cols = 1;

  std::size_t size() const { return std::size_t{rows} * cols; }

  /// Near-square grid: rows = largest divisor of n not exceeding sqrt(n).
  static GridTopology near_square(std::uint32_t n);

  bool operator==(const GridTopology&) const = default;
};

double grid_distance(const GridTopology& grid, std::size_t i, std::size_t j);

enum class Decay : std::uint32_t { Linear = 0, Exponential = 1 };

struct SomTrainConfig {
  std::uint32_t epochs = 10;
  double alpha = 0.1;
  /// Neighborhood width scale. Unset means max(rows, cols) / 2 of the grid
  /// being trained.
  std::optional<double> theta;
  Decay decay = Decay::Linear;
  std::uint64_t seed = 0;

  /// Throws ContractError unless epochs >= 1, alpha in (0, 1], theta > 0.
  void validate() const;
  /// Copy with theta filled in for `grid`.
  SomTrainConfig resolved(const GridTopology& grid) const;

  bool operator==(const SomTrainConfig&) const = default;
};

/// T(t) for epoch t in [0, epochs).
double decay_factor(const SomTrainConfig& config, std::uint32_t t);

/// exp(-d^2 / (2 (theta T(t))^2)), d the grid distance between i_star and i.
/// `config.theta` must be set.
double neighborhood(const SomTrainConfig& config, const GridTopology& grid, std::uint32_t t,
                    std::size_t i_star, std::size_t i);

class Som {
 public:
  Som(std::size_t dim, GridTopology grid, std::vector<float> weights);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return grid_.size(); }
  const GridTopology& grid() const noexcept { return grid_; }

  std::span<const float> weights() const noexcept { return weights_; }
  std::span<const float> weight(std::size_t i) const { return {weights_.data() + i * dim_, dim_}; }
  std::span<float> mutable_weight(std::size_t i) { return {weights_.data() + i * dim_, dim_}; }

  /// Index of the weight vector nearest to x (squared Euclidean); lowest index
  /// wins ties.
  std::size_t bmu(std::span<const float> x) const;

  /// N-length vector with a single 1 at bmu(x).
  std::vector<std::uint8_t> quantize_onehot(std::span<const float> x) const;

  bool operator==(const Som&) const = default;

 private:
  std::size_t dim_;
  GridTopology grid_;
  std::vector<float> weights_;
};

/// Weights are copies of training vectors drawn uniformly with replacement.
Som init_som(const GridTopology& grid, const RowsView& data, Rng& rng);
Som init_som(const SomTrainConfig& config, std::size_t dim, const GridTopology& grid,
             const RowsView& data);

/// Online training: per epoch, shuffle the sample order, then move every
/// neuron toward each sample in turn by A(t) * Theta(t, bmu, i).
void train_som(Som& som, const SomTrainConfig& config, const RowsView& data, Rng& rng);
void train_som(Som& som, const SomTrainConfig& config, const RowsView& data);

/// Initialization followed by training, both drawing from one stream seeded
/// with config.seed.
Som fit_som(const SomTrainConfig& config, const GridTopology& grid, const RowsView& data);

/// Mean Euclidean distance from each sample to its BMU weight.
double quantization_error(const Som& som, const RowsView& data);

}  // namespace somsam
