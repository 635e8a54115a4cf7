#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "somsam/error.hpp"
#include "somsam/rng.hpp"
#include "somsam/som.hpp"

namespace somsam {
namespace {

SomTrainConfig config(std::uint32_t epochs, double alpha, double theta, Decay decay,
                      std::uint64_t seed = 1) {
  return SomTrainConfig{epochs, alpha, theta, decay, seed};
}

std::vector<float> random_unit_vector(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (float& x : v) {
    x = static_cast<float>(rng.normal());
    norm += static_cast<double>(x) * x;
  }
  norm = std::sqrt(norm);
  for (float& x : v) x = static_cast<float>(x / norm);
  return v;
}

TEST(GridTopology, NearSquareShapes) {
  EXPECT_EQ(GridTopology::near_square(16), (GridTopology{4, 4}));
  EXPECT_EQ(GridTopology::near_square(12), (GridTopology{3, 4}));
  EXPECT_EQ(GridTopology::near_square(7), (GridTopology{1, 7}));
  EXPECT_EQ(GridTopology::near_square(100), (GridTopology{10, 10}));
  EXPECT_EQ(GridTopology::near_square(1), (GridTopology{1, 1}));
  EXPECT_THROW(GridTopology::near_square(0), ContractError);
}

TEST(GridDistance, Examples) {
  const GridTopology grid{5, 5};
  EXPECT_DOUBLE_EQ(grid_distance(grid, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(grid_distance(grid, 7, 7), 0.0);
  EXPECT_DOUBLE_EQ(grid_distance(grid, 0, 3 * 5 + 4), 5.0);
}

TEST(GridDistance, SymmetricAndZeroOnlyOnDiagonal) {
  const GridTopology grid{3, 4};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      EXPECT_EQ(grid_distance(grid, i, j), grid_distance(grid, j, i));
      EXPECT_EQ(grid_distance(grid, i, j) == 0.0, i == j);
    }
  }
}

TEST(GridDistance, RejectsOutOfRange) {
  EXPECT_THROW(grid_distance(GridTopology{2, 2}, 0, 4), ContractError);
}

TEST(DecayFactor, Examples) {
  EXPECT_DOUBLE_EQ(decay_factor(config(10, 0.1, 1.0, Decay::Linear), 0), 1.0);
  EXPECT_DOUBLE_EQ(decay_factor(config(10, 0.1, 1.0, Decay::Linear), 5), 0.5);
  EXPECT_DOUBLE_EQ(decay_factor(config(10, 0.1, 1.0, Decay::Exponential), 0), 1.0);
  EXPECT_DOUBLE_EQ(decay_factor(config(10, 0.1, 1.0, Decay::Exponential), 5), std::exp(-0.5));
}

TEST(DecayFactor, PositiveBeforeLastEpochAndRejectsEnd) {
  const auto cfg = config(4, 0.1, 1.0, Decay::Linear);
  for (std::uint32_t t = 0; t < 4; ++t) {
    EXPECT_GT(decay_factor(cfg, t), 0.0);
    EXPECT_LE(decay_factor(cfg, t), 1.0);
  }
  EXPECT_THROW(decay_factor(cfg, 4), ContractError);
}

TEST(Neighborhood, Examples) {
  const GridTopology grid{5, 5};
  const auto cfg = config(10, 0.1, 1.0, Decay::Linear);
  EXPECT_DOUBLE_EQ(neighborhood(cfg, grid, 3, 12, 12), 1.0);
  // (0,0) to (1,1) is sqrt(2) = theta * T(0) * sqrt(2).
  EXPECT_NEAR(neighborhood(cfg, grid, 0, 0, 6), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(neighborhood(cfg, grid, 0, 0, 6), 0.367879, 1e-6);
  // theta = 1, E = 2, t = 1 gives T = 0.5; d = 1.
  const auto half = config(2, 0.1, 1.0, Decay::Linear);
  EXPECT_NEAR(neighborhood(half, grid, 1, 0, 1), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(neighborhood(half, grid, 1, 0, 1), 0.135335, 1e-6);
}

TEST(Neighborhood, SymmetricAndDecreasingInDistance) {
  const GridTopology grid{4, 6};
  const auto cfg = config(5, 0.1, 2.0, Decay::Exponential);
  for (std::uint32_t t = 0; t < 5; ++t) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double a = neighborhood(cfg, grid, t, i, j);
        EXPECT_EQ(a, neighborhood(cfg, grid, t, j, i));
        EXPECT_GT(a, 0.0);
        EXPECT_LE(a, 1.0);
        for (std::size_t l = 0; l < grid.size(); ++l) {
          if (grid_distance(grid, i, l) > grid_distance(grid, i, j)) {
            EXPECT_LT(neighborhood(cfg, grid, t, i, l), a);
          }
        }
      }
    }
  }
}

TEST(Bmu, Examples) {
  const Som two(2, GridTopology{1, 2}, {1, 0, 0, 1});
  const std::vector<float> x{0.9f, 0.1f};
  EXPECT_EQ(two.bmu(x), 0u);

  const Som four(2, GridTopology{2, 2}, {0, 0, 1, 1, 2, 2, 3, 3});
  const std::vector<float> w3{3, 3};
  EXPECT_EQ(four.bmu(w3), 3u);

  const Som tied(2, GridTopology{1, 2}, {1, 0, 1, 0});
  const std::vector<float> any{-4.0f, 7.5f};
  EXPECT_EQ(tied.bmu(any), 0u);
}

TEST(Bmu, DimensionMismatchCarriesBothDims) {
  const Som som(2, GridTopology{1, 2}, {1, 0, 0, 1});
  const std::vector<float> x{1, 2, 3};
  try {
    som.bmu(x);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.expected(), 2u);
    EXPECT_EQ(e.actual(), 3u);
  }
}

TEST(QuantizeOnehot, SingleActivePosition) {
  const Som som(1, GridTopology{2, 2}, {0, 1, 2, 3});
  const std::vector<float> x{2.1f};
  EXPECT_EQ(som.quantize_onehot(x), (std::vector<std::uint8_t>{0, 0, 1, 0}));

  Rng rng(5);
  const Som wide(3, GridTopology{3, 3}, std::vector<float>(27, 0.0f));
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_unit_vector(rng, 3);
    const auto hot = wide.quantize_onehot(v);
    EXPECT_EQ(std::count(hot.begin(), hot.end(), 1), 1);
  }
}

// With unit-norm rows and input, nearest weight == largest dot product.
TEST(QuantizeOnehot, MatchesArgmaxDotProductOnUnitVectors) {
  Rng rng(11);
  int checked = 0;
  while (checked < 300) {
    const std::size_t dim = 2 + rng.uniform_index(6);
    const std::size_t n = 2 + rng.uniform_index(10);
    std::vector<float> weights;
    for (std::size_t i = 0; i < n; ++i) {
      const auto w = random_unit_vector(rng, dim);
      weights.insert(weights.end(), w.begin(), w.end());
    }
    const Som som(dim, GridTopology{1, static_cast<std::uint32_t>(n)}, weights);
    const auto x = random_unit_vector(rng, dim);

    std::vector<double> dots(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dim; ++c) dots[i] += double{weights[i * dim + c]} * x[c];
    }
    auto sorted = dots;
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted[0] - sorted[1] < 1e-5) continue;  // near-tie, reject
    const auto argmax = static_cast<std::size_t>(std::max_element(dots.begin(), dots.end()) - dots.begin());
    const auto hot = som.quantize_onehot(x);
    EXPECT_EQ(hot[argmax], 1);
    ++checked;
  }
}

TEST(InitSom, DeterministicAndSeedSensitive) {
  std::vector<float> data;
  Rng rng(3);
  for (int i = 0; i < 40; ++i) data.push_back(static_cast<float>(rng.uniform01()));
  const auto view = RowsView::dense(data, 2);
  const GridTopology grid{5, 5};
  const auto a = init_som(config(1, 0.1, 1.0, Decay::Linear, 7), 2, grid, view);
  const auto b = init_som(config(1, 0.1, 1.0, Decay::Linear, 7), 2, grid, view);
  const auto c = init_som(config(1, 0.1, 1.0, Decay::Linear, 8), 2, grid, view);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(InitSom, WeightsAreTrainingSamples) {
  const std::vector<float> one{0.25f, -1.5f};
  const auto som = init_som(config(1, 0.1, 1.0, Decay::Linear), 2, GridTopology{3, 3},
                            RowsView::dense(one, 2));
  for (std::size_t i = 0; i < som.size(); ++i) {
    EXPECT_EQ(som.weight(i)[0], 0.25f);
    EXPECT_EQ(som.weight(i)[1], -1.5f);
  }

  const std::vector<float> several{0, 0, 1, 1, 2, 2, 3, 3};
  const auto picked = init_som(config(1, 0.1, 1.0, Decay::Linear, 9), 2, GridTopology{4, 4},
                               RowsView::dense(several, 2));
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const float v = picked.weight(i)[0];
    EXPECT_EQ(picked.weight(i)[1], v);
    EXPECT_TRUE(v == 0 || v == 1 || v == 2 || v == 3);
  }
}

TEST(InitSom, EmptyDataIsAnError) {
  const std::vector<float> none;
  EXPECT_THROW(init_som(config(1, 0.1, 1.0, Decay::Linear), 2, GridTopology{1, 1},
                        RowsView{none.data(), 0, 2, 2}),
               ContractError);
}

TEST(TrainSom, FullRateMovesWinnerOntoSample) {
  Som som(2, GridTopology{1, 3}, {0.3f, -0.7f, 5, 5, 9, 9});
  const std::vector<float> x{0.1f, 0.2f};
  train_som(som, config(1, 1.0, 0.5, Decay::Linear), RowsView::dense(x, 2));
  EXPECT_EQ(som.weight(0)[0], x[0]);
  EXPECT_EQ(som.weight(0)[1], x[1]);
}

// theta -> 0+: every non-winner's neighborhood underflows, so only the BMU
// moves, by alpha of the way.
TEST(TrainSom, VanishingNeighborhoodMovesOnlyWinnerHalfway) {
  const std::vector<float> init{0, 0, 4, 4, 8, 8, 12, 12};
  Som som(2, GridTopology{2, 2}, init);
  const std::vector<float> x{5, 3};
  train_som(som, config(1, 0.5, 1e-3, Decay::Linear), RowsView::dense(x, 2));
  EXPECT_FLOAT_EQ(som.weight(1)[0], 4.5f);
  EXPECT_FLOAT_EQ(som.weight(1)[1], 3.5f);
  for (std::size_t i : {0u, 2u, 3u}) {
    EXPECT_EQ(som.weight(i)[0], init[2 * i]);
    EXPECT_EQ(som.weight(i)[1], init[2 * i + 1]);
  }
}

// One update shrinks every neuron's distance to x by the factor 1 - A*Theta,
// with the factor recomputed here from the closed form.
TEST(TrainSom, SingleUpdateContractsTowardSample) {
  Rng rng(21);
  const GridTopology grid{3, 3};
  std::vector<float> init(9 * 4);
  for (float& w : init) w = static_cast<float>(rng.uniform01() * 2 - 1);
  Som som(4, grid, init);
  const Som before = som;
  const std::vector<float> x{0.5f, -0.25f, 0.75f, 0.0f};
  const double alpha = 0.3;
  const double theta = 1.5;
  train_som(som, config(3, alpha, theta, Decay::Linear), RowsView::dense(x, 4));

  // Three epochs over one sample: apply the closed form three times.
  std::vector<double> expect(init.begin(), init.end());
  for (int t = 0; t < 3; ++t) {
    const double temp = 1.0 - t / 3.0;
    std::size_t win = 0;
    double best = 1e300;
    for (std::size_t i = 0; i < 9; ++i) {
      double d = 0;
      for (std::size_t c = 0; c < 4; ++c) d += (expect[i * 4 + c] - x[c]) * (expect[i * 4 + c] - x[c]);
      if (d < best) {
        best = d;
        win = i;
      }
    }
    for (std::size_t i = 0; i < 9; ++i) {
      const double dr = double(i / 3) - double(win / 3);
      const double dc = double(i % 3) - double(win % 3);
      const double f =
          alpha * temp * std::exp(-(dr * dr + dc * dc) / (2 * (theta * temp) * (theta * temp)));
      double before_dist = 0, after_dist = 0;
      for (std::size_t c = 0; c < 4; ++c) {
        before_dist += (expect[i * 4 + c] - x[c]) * (expect[i * 4 + c] - x[c]);
        expect[i * 4 + c] += (x[c] - expect[i * 4 + c]) * f;
        after_dist += (expect[i * 4 + c] - x[c]) * (expect[i * 4 + c] - x[c]);
      }
      EXPECT_NEAR(std::sqrt(after_dist), (1 - f) * std::sqrt(before_dist), 1e-12);
    }
  }
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(som.weights()[i], expect[i], 1e-5);
  EXPECT_NE(som, before);
}

std::vector<float> two_gaussians(std::uint64_t seed, std::size_t per_cluster) {
  Rng rng(seed);
  std::vector<float> data;
  for (std::size_t s = 0; s < per_cluster; ++s) {
    data.push_back(static_cast<float>(0.2 + 0.05 * rng.normal()));
    data.push_back(static_cast<float>(0.2 + 0.05 * rng.normal()));
    data.push_back(static_cast<float>(0.8 + 0.05 * rng.normal()));
    data.push_back(static_cast<float>(0.7 + 0.05 * rng.normal()));
  }
  return data;
}

TEST(TrainSom, ReducesQuantizationError) {
  const auto data = two_gaussians(4, 100);
  const auto view = RowsView::dense(data, 2);
  SomTrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 17;
  Rng rng(cfg.seed);
  Som som = init_som(GridTopology{3, 3}, view, rng);
  const double before = quantization_error(som, view);
  train_som(som, cfg, view, rng);
  EXPECT_LE(quantization_error(som, view), before);
}

TEST(TrainSom, LongerTrainingDoesNotWorsenError) {
  const auto data = two_gaussians(6, 100);
  const auto view = RowsView::dense(data, 2);
  std::vector<double> errors;
  for (std::uint32_t epochs : {1u, 5u, 20u}) {
    SomTrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = 3;
    errors.push_back(quantization_error(fit_som(cfg, GridTopology{2, 3}, view), view));
  }
  EXPECT_LE(errors.back(), errors.front());
}

TEST(TrainSom, Deterministic) {
  const auto data = two_gaussians(8, 50);
  const auto view = RowsView::dense(data, 2);
  SomTrainConfig cfg;
  cfg.seed = 99;
  cfg.decay = Decay::Exponential;
  EXPECT_EQ(fit_som(cfg, GridTopology{4, 4}, view), fit_som(cfg, GridTopology{4, 4}, view));
}

TEST(TrainSom, RejectsBadInput) {
  Som som(2, GridTopology{1, 2}, {0, 0, 1, 1});
  const std::vector<float> wrong_dim{1, 2, 3};
  EXPECT_THROW(train_som(som, SomTrainConfig{}, RowsView::dense(wrong_dim, 3)), ShapeError);

  const std::vector<float> bad{0, 0, 1, 1, NAN, 2};
  try {
    train_som(som, SomTrainConfig{}, RowsView::dense(bad, 2));
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("sample 2"), std::string::npos);
  }

  SomTrainConfig zero_alpha;
  zero_alpha.alpha = 0.0;
  const std::vector<float> ok{0, 0};
  EXPECT_THROW(train_som(som, zero_alpha, RowsView::dense(ok, 2)), ContractError);
}

TEST(SomTrainConfig, DefaultThetaIsHalfTheLongerSide) {
  EXPECT_DOUBLE_EQ(*SomTrainConfig{}.resolved(GridTopology{3, 8}).theta, 4.0);
  EXPECT_DOUBLE_EQ(*SomTrainConfig{}.resolved(GridTopology{10, 10}).theta, 5.0);
}

TEST(QuantizationError, Examples) {
  const Som som(2, GridTopology{1, 2}, {0, 0, 10, 10});
  const std::vector<float> exact{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(quantization_error(som, RowsView::dense(exact, 2)), 0.0);
  const std::vector<float> off{0, 2};
  EXPECT_DOUBLE_EQ(quantization_error(som, RowsView::dense(off, 2)), 2.0);
  const std::vector<float> none;
  EXPECT_THROW(quantization_error(som, RowsView{none.data(), 0, 2, 2}), ContractError);
}

}  // namespace
}  // namespace somsam
