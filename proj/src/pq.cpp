#include "somsam/pq.hpp"

#include <string>

#include "somsam/error.hpp"

namespace somsam {

std::vector<std::uint8_t> SparseCode::dense() const {
  std::vector<std::uint8_t> out(k() * n_per_som, 0);
  for (std::size_t j = 0; j < k(); ++j) out[column(j)] = 1;
  return out;
}

void SparseCode::validate(std::size_t k, std::size_t n) const {
  if (indices.size() != k) throw ShapeError("sparse code block count", k, indices.size());
  if (n_per_som != n) throw ShapeError("sparse code neurons per SOM", n, n_per_som);
  for (std::size_t j = 0; j < k; ++j) {
    if (indices[j] >= n) {
      throw ShapeError("sparse code index in block " + std::to_string(j) + " out of range", n,
                       indices[j]);
    }
  }
}

std::vector<std::span<const float>> split(std::span<const float> x, std::size_t k) {
  if (k == 0) throw ContractError("split into zero parts");
  if (x.size() % k != 0) {
    throw ShapeError("vector length " + std::to_string(x.size()) + " is not divisible by k = " +
                         std::to_string(k),
                     (x.size() / k + 1) * k, x.size());
  }
  const std::size_t d = x.size() / k;
  std::vector<std::span<const float>> parts;
  parts.reserve(k);
  for (std::size_t j = 0; j < k; ++j) parts.push_back(x.subspan(j * d, d));
  return parts;
}

ProductQuantizer::ProductQuantizer(SomTrainConfig config, std::vector<Som> soms)
    : config_(std::move(config)), soms_(std::move(soms)) {
  if (soms_.empty()) throw ContractError("product quantizer needs at least one SOM");
  for (std::size_t j = 1; j < soms_.size(); ++j) {
    if (soms_[j].dim() != soms_[0].dim()) {
      throw ShapeError("SOM " + std::to_string(j) + " input dimension", soms_[0].dim(),
                       soms_[j].dim());
    }
    if (soms_[j].grid() != soms_[0].grid()) {
      throw ShapeError("SOM " + std::to_string(j) + " neuron count", soms_[0].size(),
                       soms_[j].size());
    }
  }
}

SparseCode ProductQuantizer::quantize(std::span<const float> x) const {
  if (x.size() != input_dim()) throw ShapeError("quantizer input dimension", input_dim(), x.size());
  SparseCode code{n_per_som(), std::vector<std::uint32_t>(k())};
  const std::size_t d = subdim();
  for (std::size_t j = 0; j < k(); ++j) {
    code.indices[j] = static_cast<std::uint32_t>(soms_[j].bmu(x.subspan(j * d, d)));
  }
  return code;
}

std::uint64_t som_seed(std::uint64_t seed, std::size_t j) { return mix_seed(seed, j); }

ProductQuantizer train_pq(const SomTrainConfig& config, std::size_t k, const GridTopology& grid,
                          const RowsView& data) {
  if (k == 0) throw ContractError("k must be at least 1");
  if (data.rows == 0) throw ContractError("cannot train a quantizer on an empty data set");
  if (data.cols % k != 0) {
    throw ShapeError("feature dimension " + std::to_string(data.cols) +
                         " is not divisible by k = " + std::to_string(k),
                     (data.cols / k + 1) * k, data.cols);
  }
  const SomTrainConfig resolved = config.resolved(grid);
  const std::size_t d = data.cols / k;

  std::vector<Som> soms;
  soms.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    SomTrainConfig cfg = resolved;
    cfg.seed = som_seed(config.seed, j);
    const RowsView sub{data.base + j * d, data.rows, d, data.stride};
    try {
      soms.push_back(fit_som(cfg, grid, sub));
    } catch (const Error& e) {
      throw Error(e.kind(), "SOM " + std::to_string(j) + ": " + e.what());
    }
  }
  return ProductQuantizer(resolved, std::move(soms));
}

ProductQuantizer train_pq(const SomTrainConfig& config, std::size_t k, std::uint32_t n_per_som,
                          const RowsView& data) {
  return train_pq(config, k, GridTopology::near_square(n_per_som), data);
}

}  // namespace somsam
