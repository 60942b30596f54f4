#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "scenemap/core.hpp"
#include "scenemap/rng.hpp"

namespace scenemap {

struct GenerativeConfig {
  Hyperparameters params;
  int32_t width = 128, height = 128;   // cells
  int32_t customers_per_cell = 5;
  Eigen::Matrix3d position_noise = Eigen::Matrix3d::Zero();  // measurement covariance (m^2)
  uint64_t seed = 0;
  bool shuffled_order = false;  // order-sensitivity check; default raster

  void validate() const;
};

// Samples a world from the spatially correlated CRP prior: cells are visited
// in raster order, each seats customers_per_cell customers against the
// already-seated neighborhood counts, and the cell label is the mode of its
// customers. Labels are compacted to the contiguous range [1, K_true] by
// first raster appearance. Deterministic given the seed.
LabelGrid sample_world(const GenerativeConfig& cfg);

struct ObservationSample {
  std::vector<WordObservation> observations;
  std::vector<std::vector<double>> phi;  // [topic-1][word], the table actually used
};

// Emits words_per_cell words per cell from the cell topic's word distribution
// at positions = cell center + Gaussian noise, clamped to the world box.
// When phi is empty, per-topic distributions are sampled from Dirichlet(beta).
ObservationSample sample_observations(const LabelGrid& world, const Hyperparameters& params,
                                      std::vector<std::vector<double>> phi, int32_t words_per_cell,
                                      const Eigen::Matrix3d& noise, uint64_t seed);

}  // namespace scenemap
