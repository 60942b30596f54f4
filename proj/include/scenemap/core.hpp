#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace scenemap {

enum class Neighborhood { VonNeumann3D, VonNeumann2D };

struct Hyperparameters {
  double alpha = 0.1;   // reuse weight for topics known elsewhere in the scene
  double beta = 1.0;    // symmetric Dirichlet concentration of the word model
  double gamma = 1e-4;  // new-table weight
  std::array<double, 3> cell_size{1.0, 1.0, 1.0};  // meters per axis
  int32_t vocab_size = 1;
  Neighborhood neighborhood = Neighborhood::VonNeumann3D;

  // throws std::invalid_argument on violation
  void validate() const;
};

struct WordObservation {
  double t = 0.0;   // seconds
  int32_t word = 0; // in [0, vocab_size)
  std::array<double, 3> pos{0.0, 0.0, 0.0};  // (x, y, d) meters, d = depth
};

struct CellCoord {
  int64_t i = 0, j = 0, k = 0;
  friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

struct CellCoordHash {
  size_t operator()(const CellCoord& c) const noexcept {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint64_t v : {static_cast<uint64_t>(c.i), static_cast<uint64_t>(c.j),
                       static_cast<uint64_t>(c.k)}) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<size_t>(h);
  }
};

// One restaurant of the model: the observations that fell into one box of the
// discretized world, with their current topic labels.
struct Cell {
  CellCoord coord;
  std::vector<int32_t> words;
  std::vector<int32_t> labels;  // parallel to words
  std::map<int32_t, int64_t> topic_hist;

  mutable std::mutex claim;  // refinement-worker ownership, never held during sampling

  Cell() = default;
  Cell(const Cell&) = delete;
  Cell& operator=(const Cell&) = delete;

  size_t size() const { return words.size(); }
};

// Full inference state. Cells live in a hash map so insertion and lookup stay
// amortized O(1) as the explored region grows. Topic ids start at 1 and are
// never recycled; emptied topics keep their id retired.
struct SceneModel {
  explicit SceneModel(Hyperparameters p);
  SceneModel(const SceneModel&) = delete;
  SceneModel& operator=(const SceneModel&) = delete;

  Hyperparameters params;

  std::unordered_map<CellCoord, Cell, CellCoordHash> cells;
  std::vector<CellCoord> cell_order;  // insertion order, for deterministic iteration

  std::vector<int64_t> topic_totals;                  // [topic-1]
  std::vector<std::vector<int64_t>> topic_word_counts;  // [topic-1][word]
  int32_t next_topic_id = 1;
  size_t total_observations = 0;

  size_t recent_window = 32;
  std::deque<CellCoord> recent;  // most recently touched cells

  // Taken shared while refinement workers compute weights, unique while they
  // apply count updates or the ingest thread inserts. Serial paths skip it.
  mutable std::shared_mutex mu;

  int32_t topic_count() const;               // K = topics with nonzero total
  std::vector<int32_t> active_topics() const;  // ascending ids
  int64_t topic_total(int32_t topic) const;
  int64_t word_count(int32_t topic, int32_t word) const;

  Cell& cell_at(const CellCoord& c);  // inserts an empty cell when absent
  const Cell* find_cell(const CellCoord& c) const;

  // Appends the observation with a caller-chosen label, growing the topic
  // tables as needed. Used to build models with known assignments.
  void force_insert(const WordObservation& obs, int32_t label);

  int32_t allocate_topic();  // fresh id, zeroed count row
  void touch(const CellCoord& c);

  // count plumbing shared with the sampler; label must already exist
  void add_counts(Cell& cell, int32_t word, int32_t label);
  void remove_counts(Cell& cell, int32_t word, int32_t label);
};

// floor(pos / cell_size) per axis; throws on non-finite positions
CellCoord cell_of(const std::array<double, 3>& pos, const Hyperparameters& p);

// Von Neumann neighborhood; never contains c itself
std::vector<CellCoord> neighbors(const CellCoord& c, Neighborhood mode);

// Sum of topic_hist over c and its neighbors; missing cells contribute zero.
std::map<int32_t, int64_t> neighborhood_topic_counts(const SceneModel& m, const CellCoord& c);

// Recomputes the global tables from the cells; diagnostic for the
// global-consistency invariant.
struct CountTables {
  std::vector<int64_t> totals;
  std::vector<std::vector<int64_t>> words;
};
CountTables aggregate_counts(const SceneModel& m);
bool globally_consistent(const SceneModel& m);

// Flattened MAP labeling: one pixel per (i, j) cell column, 0 = unexplored,
// labels compacted to 1..P with the palette mapping back to model topic ids.
struct SceneMap {
  int64_t origin_i = 0, origin_j = 0;
  int32_t width = 0, height = 0;
  double cell_size_x = 1.0, cell_size_y = 1.0;
  std::vector<int32_t> labels;   // row-major, compact ids
  std::vector<int32_t> palette;  // palette[id-1] = original topic id

  friend bool operator==(const SceneMap&, const SceneMap&) = default;

  int32_t at(int32_t col, int32_t row) const { return labels[static_cast<size_t>(row) * width + col]; }
  int32_t distinct_labels() const;
};

// Dense fully-labeled grid: generated worlds, annotations, decoded maps.
struct LabelGrid {
  int64_t origin_i = 0, origin_j = 0;
  int32_t width = 0, height = 0;
  double cell_size = 1.0;
  std::vector<int32_t> labels;  // row-major

  friend bool operator==(const LabelGrid&, const LabelGrid&) = default;

  int32_t at(int32_t col, int32_t row) const { return labels[static_cast<size_t>(row) * width + col]; }
  int32_t distinct_labels() const;  // ignoring zeros
};

}  // namespace scenemap
