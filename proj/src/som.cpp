#include "somsam/som.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "somsam/error.hpp"

namespace somsam {

namespace {

void check_index(const GridTopology& grid, std::size_t i) {
  if (i >= grid.size()) {
    throw ContractError("neuron index " + std::to_string(i) + " out of range for " +
                        std::to_string(grid.size()) + " neurons");
  }
}

void check_samples(const RowsView& data, std::size_t dim) {
  if (data.cols != dim) throw ShapeError("sample dimension mismatch", dim, data.cols);
  for (std::size_t s = 0; s < data.rows; ++s) {
    for (float v : data.row(s)) {
      if (!std::isfinite(v)) {
        throw ContractError("non-finite component in sample " + std::to_string(s));
      }
    }
  }
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = static_cast<double>(a[c]) - static_cast<double>(b[c]);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

GridTopology GridTopology::near_square(std::uint32_t n) {
  if (n == 0) throw ContractError("grid needs at least one neuron");
  std::uint32_t rows = 1;
  for (std::uint32_t q = 1; std::uint64_t{q} * q <= n; ++q) {
    if (n % q == 0) rows = q;
  }
  return {rows, n / rows};
}

double grid_distance(const GridTopology& grid, std::size_t i, std::size_t j) {
  check_index(grid, i);
  check_index(grid, j);
  const auto dr = static_cast<double>(i / grid.cols) - static_cast<double>(j / grid.cols);
  const auto dc = static_cast<double>(i % grid.cols) - static_cast<double>(j % grid.cols);
  return std::sqrt(dr * dr + dc * dc);
}

void SomTrainConfig::validate() const {
  if (epochs < 1) throw ContractError("epochs must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in (0, 1]");
  if (theta && !(*theta > 0.0 && std::isfinite(*theta))) {
    throw ContractError("theta must be positive and finite");
  }
}

SomTrainConfig SomTrainConfig::resolved(const GridTopology& grid) const {
  SomTrainConfig out = *this;
  if (!out.theta) out.theta = static_cast<double>(std::max(grid.rows, grid.cols)) / 2.0;
  out.validate();
  return out;
}

double decay_factor(const SomTrainConfig& config, std::uint32_t t) {
  if (t >= config.epochs) {
    throw ContractError("epoch " + std::to_string(t) + " outside [0, " +
                        std::to_string(config.epochs) + ")");
  }
  const double ratio = static_cast<double>(t) / static_cast<double>(config.epochs);
  return config.decay == Decay::Linear ? 1.0 - ratio : std::exp(-ratio);
}

double neighborhood(const SomTrainConfig& config, const GridTopology& grid, std::uint32_t t,
                    std::size_t i_star, std::size_t i) {
  if (!config.theta) throw ContractError("neighborhood needs a resolved theta");
  const double d = grid_distance(grid, i_star, i);
  const double width = *config.theta * decay_factor(config, t);
  return std::exp(-(d * d) / (2.0 * width * width));
}

Som::Som(std::size_t dim, GridTopology grid, std::vector<float> weights)
    : dim_(dim), grid_(grid), weights_(std::move(weights)) {
  if (dim_ == 0) throw ContractError("SOM input dimension must be positive");
  if (grid_.rows == 0 || grid_.cols == 0) throw ContractError("SOM grid must be nonempty");
  if (weights_.size() != grid_.size() * dim_) {
    throw ShapeError("SOM weight buffer size", grid_.size() * dim_, weights_.size());
  }
  for (float w : weights_) {
    if (!std::isfinite(w)) throw ContractError("SOM weights must be finite");
  }
}

std::size_t Som::bmu(std::span<const float> x) const {
  if (x.size() != dim_) throw ShapeError("SOM input dimension", dim_, x.size());
  std::size_t best = 0;
  double best_dist = squared_distance(weight(0), x);
  for (std::size_t i = 1; i < size(); ++i) {
    const double dist = squared_distance(weight(i), x);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

std::vector<std::uint8_t> Som::quantize_onehot(std::span<const float> x) const {
  std::vector<std::uint8_t> out(size(), 0);
  out[bmu(x)] = 1;
  return out;
}

Som init_som(const GridTopology& grid, const RowsView& data, Rng& rng) {
  if (data.rows == 0) throw ContractError("cannot initialize a SOM from an empty data set");
  if (data.cols == 0) throw ContractError("SOM input dimension must be positive");
  std::vector<float> weights;
  weights.reserve(grid.size() * data.cols);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pick = data.row(static_cast<std::size_t>(rng.uniform_index(data.rows)));
    weights.insert(weights.end(), pick.begin(), pick.end());
  }
  return Som(data.cols, grid, std::move(weights));
}

Som init_som(const SomTrainConfig& config, std::size_t dim, const GridTopology& grid,
             const RowsView& data) {
  if (data.cols != dim) throw ShapeError("sample dimension mismatch", dim, data.cols);
  Rng rng(config.seed);
  return init_som(grid, data, rng);
}

void train_som(Som& som, const SomTrainConfig& config, const RowsView& data, Rng& rng) {
  const SomTrainConfig cfg = config.resolved(som.grid());
  check_samples(data, som.dim());

  const GridTopology& grid = som.grid();
  const std::size_t n = som.size();
  const std::size_t dim = som.dim();

  // Theta depends on the grid only through the squared distance dr^2 + dc^2,
  // so each epoch tabulates it once per distinct value.
  const std::size_t max_d2 =
      std::size_t{grid.rows - 1} * (grid.rows - 1) + std::size_t{grid.cols - 1} * (grid.cols - 1);
  std::vector<double> theta_by_d2(max_d2 + 1);
  std::vector<double> rate(n);

  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::uint32_t t = 0; t < cfg.epochs; ++t) {
    const double temp = decay_factor(cfg, t);
    const double learning = cfg.alpha * temp;
    const double width = *cfg.theta * temp;
    for (std::size_t d2 = 0; d2 <= max_d2; ++d2) {
      theta_by_d2[d2] = std::exp(-static_cast<double>(d2) / (2.0 * width * width));
    }

    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t s : order) {
      const auto x = data.row(s);
      const std::size_t winner = som.bmu(x);
      const std::size_t wr = winner / grid.cols;
      const std::size_t wc = winner % grid.cols;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = i / grid.cols;
        const std::size_t c = i % grid.cols;
        const std::size_t dr = r > wr ? r - wr : wr - r;
        const std::size_t dc = c > wc ? c - wc : wc - c;
        rate[i] = learning * theta_by_d2[dr * dr + dc * dc];
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double f = rate[i];
        if (f == 0.0) continue;
        auto w = som.mutable_weight(i);
        for (std::size_t c = 0; c < dim; ++c) {
          const double wv = w[c];
          w[c] = static_cast<float>(wv + (static_cast<double>(x[c]) - wv) * f);
        }
      }
    }
  }
}

void train_som(Som& som, const SomTrainConfig& config, const RowsView& data) {
  Rng rng(config.seed);
  train_som(som, config, data, rng);
}

Som fit_som(const SomTrainConfig& config, const GridTopology& grid, const RowsView& data) {
  config.validate();
  Rng rng(config.seed);
  Som som = init_som(grid, data, rng);
  train_som(som, config, data, rng);
  return som;
}

double quantization_error(const Som& som, const RowsView& data) {
  if (data.rows == 0) throw ContractError("quantization error of an empty data set");
  if (data.cols != som.dim()) throw ShapeError("sample dimension mismatch", som.dim(), data.cols);
  double total = 0.0;
  for (std::size_t s = 0; s < data.rows; ++s) {
    const auto x = data.row(s);
    total += std::sqrt(squared_distance(som.weight(som.bmu(x)), x));
  }
  return total / static_cast<double>(data.rows);
}

}  // namespace somsam
