#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "scenemap/core.hpp"
#include "scenemap/rng.hpp"

namespace scenemap {

// Unnormalized seating weights of the spatially correlated CRP conditional.
// `topics` is ascending by topic id and carries only topics with nonzero
// global total; every such topic is reachable with at least weight
// alpha * word factor.
struct SeatingWeights {
  std::vector<std::pair<int32_t, double>> topics;
  double new_topic = 0.0;

  double total() const {
    double s = new_topic;
    for (const auto& [id, w] : topics) s += w;
    return s;
  }
};

struct ObservationRef {
  CellCoord cell;
  size_t index = 0;
};

// weight_k = (n_k + alpha) * (count(k,w) + beta) / (total(k) + V*beta) with
// n_k the Von Neumann neighborhood count at c; new table = gamma / V.
// `exclude` removes one observation's contribution first (leave-one-out).
SeatingWeights seating_weights(const SceneModel& m, const CellCoord& c, int32_t word,
                               std::optional<ObservationRef> exclude = std::nullopt);

// Draws from the normalized weights; returns a topic id, or 0 for a new table.
int32_t draw_seating(const SeatingWeights& w, Rng& rng);

// Seats the observation in its cell and updates all counts. Returns the label
// (a fresh id when a new table opens). The first observation ever opens table
// 1 even when gamma = 0.
int32_t insert_observation(SceneModel& m, const WordObservation& obs, Rng& rng);

// Sequentially re-labels every observation in the cell with self-exclusion.
// Unknown cell is a no-op. Returns the number of changed labels.
int32_t resample_cell(SceneModel& m, const CellCoord& c, Rng& rng);

// Resamples every cell in insertion order; returns changed labels.
int64_t full_sweep(SceneModel& m, Rng& rng);

struct RefineStats {
  int64_t visits = 0;
  int64_t changed = 0;
  int32_t topics = 0;
  size_t observations = 0;
};

// Visits `budget` cells: each pick is a 50/50 mix of uniform-over-all-cells
// and uniform-over-recently-touched, then resamples the cell.
RefineStats refine(SceneModel& m, int64_t budget, Rng& rng);

// Same schedule split across `workers` threads. Workers claim cells through
// the per-cell mutex so no two resample the same cell at once; count reads
// during sampling may be stale by at most the in-flight updates. workers == 1
// matches the serial path draw-for-draw.
RefineStats refine_parallel(SceneModel& m, int64_t budget, int workers, uint64_t seed);

// Mode of the cell's labels, ties to the lowest id; 0 = unexplored.
int32_t map_topic_of_cell(const SceneModel& m, const CellCoord& c);

// Collapsed posterior mean of phi_k: (count(k,w) + beta) / (total(k) + V*beta).
std::vector<double> topic_word_distribution(const SceneModel& m, int32_t topic);

}  // namespace scenemap
