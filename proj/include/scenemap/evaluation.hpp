#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenemap/core.hpp"

namespace scenemap {

// Plug-in mutual information (nats) between two label grids over the region
// where both are nonzero; throws std::runtime_error when no pixels overlap.
// Grids are aligned through their shared origin and must use the same cell
// size, so differing extents compare over their intersection.
struct MiScore {
  double mi = 0.0;       // nats
  double h_left = 0.0;   // entropy of the first grid on the overlap
  double h_right = 0.0;  // entropy of the second grid on the overlap
  size_t overlap = 0;

  // MI / max(H, H'); 0 when both entropies vanish (both maps constant)
  double normalized() const;
};

MiScore mi_score(const LabelGrid& z, const LabelGrid& a);
double mutual_information(const LabelGrid& z, const LabelGrid& a);
double mutual_information(const SceneMap& z, const LabelGrid& a);

LabelGrid to_label_grid(const SceneMap& map);  // palette applied

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct GridSearchSpec {
  std::vector<double> alphas, betas, gammas;  // non-empty, positive
  std::array<double, 3> cell_size{1.0, 1.0, 1.0};
  int32_t vocab_size = 1;
  Neighborhood neighborhood = Neighborhood::VonNeumann3D;
  std::vector<uint64_t> seeds{0};

  void validate() const;
};

struct GridSearchRow {
  double alpha = 0, beta = 0, gamma = 0;
  uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double mi_annotations = 0.0;
  double mi_reference = 0.0;
  size_t encoded_bytes = 0;
  int32_t distinct_labels = 0;
};

struct GridSearchResult {
  double best_alpha = 0, best_beta = 0, best_gamma = 0;
  double best_mean_mi = 0.0;
  std::vector<GridSearchRow> rows;  // grid x seeds, in spec order
};

// For every (alpha, beta, gamma) x seed: run inference over the dataset to
// the refine budget, snapshot, score. Argmax of mean MI per grid point, ties
// to the lexicographically smallest (alpha, beta, gamma). Failed runs are
// recorded and excluded from the mean; all-failed raises.
// `reference` feeds the second MI column; when null the annotations are used.
GridSearchResult grid_search(const GridSearchSpec& spec, const std::vector<WordObservation>& dataset,
                             const LabelGrid& annotations, int64_t refine_budget,
                             const LabelGrid* reference = nullptr, int parallelism = 0);

std::string scatter_table_csv(const std::vector<GridSearchRow>& rows);

// Recomputes the argmax from emitted rows; oracle counterpart of grid_search.
struct GridPoint {
  double alpha = 0, beta = 0, gamma = 0;
};
GridPoint argmax_from_rows(const std::vector<GridSearchRow>& rows);

}  // namespace scenemap
