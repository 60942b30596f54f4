#include "scenemap/inference.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace scenemap {

SeatingWeights seating_weights(const SceneModel& m, const CellCoord& c, int32_t word,
                               std::optional<ObservationRef> exclude) {
  if (word < 0 || word >= m.params.vocab_size) throw std::invalid_argument("word id out of vocabulary");

  // leave-one-out adjustments
  int32_t ex_label = 0, ex_word = 0;
  bool ex_in_stencil = false;
  if (exclude) {
    const Cell* ec = m.find_cell(exclude->cell);
    if (!ec || exclude->index >= ec->size()) throw std::invalid_argument("exclusion target does not exist");
    ex_label = ec->labels[exclude->index];
    ex_word = ec->words[exclude->index];
    if (exclude->cell == c) {
      ex_in_stencil = true;
    } else {
      for (const CellCoord& n : neighbors(c, m.params.neighborhood)) {
        if (n == exclude->cell) {
          ex_in_stencil = true;
          break;
        }
      }
    }
  }

  const std::map<int32_t, int64_t> hood = neighborhood_topic_counts(m, c);
  const double vbeta = static_cast<double>(m.params.vocab_size) * m.params.beta;

  SeatingWeights out;
  out.new_topic = m.params.gamma / static_cast<double>(m.params.vocab_size);
  for (int32_t topic = 1; topic < m.next_topic_id; ++topic) {
    int64_t total = m.topic_total(topic);
    int64_t cnt = m.word_count(topic, word);
    auto it = hood.find(topic);
    int64_t n = it == hood.end() ? 0 : it->second;
    if (exclude && topic == ex_label) {
      --total;
      if (ex_word == word) --cnt;
      if (ex_in_stencil) --n;
    }
    if (total <= 0) continue;  // retired (or excluded away) topics are not candidates
    const double weight = (static_cast<double>(n) + m.params.alpha) *
                          (static_cast<double>(cnt) + m.params.beta) /
                          (static_cast<double>(total) + vbeta);
    out.topics.emplace_back(topic, weight);
  }
  return out;
}

int32_t draw_seating(const SeatingWeights& w, Rng& rng) {
  const double total = w.total();
  if (!(total > 0.0)) return -1;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (const auto& [topic, weight] : w.topics) {
    acc += weight;
    if (u < acc) return topic;
  }
  return 0;  // new table
}

int32_t insert_observation(SceneModel& m, const WordObservation& obs, Rng& rng) {
  if (obs.word < 0 || obs.word >= m.params.vocab_size) throw std::invalid_argument("word id out of vocabulary");
  const CellCoord coord = cell_of(obs.pos, m.params);

  const SeatingWeights w = seating_weights(m, coord, obs.word);
  int32_t drawn = w.topics.empty() && !(m.params.gamma > 0.0)
                      ? 0  // K = 0 with gamma = 0: the first customer still opens table 1
                      : draw_seating(w, rng);
  if (drawn < 0) drawn = 0;

  const int32_t label = drawn > 0 ? drawn : m.allocate_topic();
  Cell& cell = m.cell_at(coord);
  cell.words.push_back(obs.word);
  cell.labels.push_back(label);
  m.add_counts(cell, obs.word, label);
  ++m.total_observations;
  m.touch(coord);
  return label;
}

namespace {

// One Gibbs step for cell.labels[idx]. `synced` routes reads through the
// shared lock and count updates through the unique lock for parallel refine.
bool resample_one(SceneModel& m, Cell& cell, size_t idx, Rng& rng, bool synced) {
  const int32_t word = cell.words[idx];
  const int32_t old_label = cell.labels[idx];

  if (synced) {
    std::unique_lock lk(m.mu);
    m.remove_counts(cell, word, old_label);
  } else {
    m.remove_counts(cell, word, old_label);
  }

  int32_t drawn;
  if (synced) {
    std::shared_lock lk(m.mu);
    drawn = draw_seating(seating_weights(m, cell.coord, word), rng);
  } else {
    drawn = draw_seating(seating_weights(m, cell.coord, word), rng);
  }

  auto apply = [&]() -> bool {
    int32_t label;
    if (drawn > 0) {
      label = drawn;
    } else if (drawn == 0) {
      label = m.allocate_topic();
    } else {
      label = old_label;  // zero conditional mass: keep the previous seat
    }
    m.add_counts(cell, word, label);
    cell.labels[idx] = label;
    return label != old_label;
  };

  if (synced) {
    std::unique_lock lk(m.mu);
    return apply();
  }
  return apply();
}

int32_t resample_cell_impl(SceneModel& m, Cell& cell, Rng& rng, bool synced) {
  int32_t changed = 0;
  for (size_t idx = 0; idx < cell.size(); ++idx) {
    changed += resample_one(m, cell, idx, rng, synced);
  }
  return changed;
}

CellCoord pick_cell(const SceneModel& m, Rng& rng) {
  const bool use_recent = rng.uniform() < 0.5 && !m.recent.empty();
  if (use_recent) return m.recent[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(m.recent.size())))];
  return m.cell_order[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(m.cell_order.size())))];
}

}  // namespace

int32_t resample_cell(SceneModel& m, const CellCoord& c, Rng& rng) {
  auto it = m.cells.find(c);
  if (it == m.cells.end()) return 0;
  return resample_cell_impl(m, it->second, rng, false);
}

int64_t full_sweep(SceneModel& m, Rng& rng) {
  int64_t changed = 0;
  for (const CellCoord& c : m.cell_order) changed += resample_cell(m, c, rng);
  return changed;
}

RefineStats refine(SceneModel& m, int64_t budget, Rng& rng) {
  RefineStats stats;
  if (budget < 0) throw std::invalid_argument("refine budget must be >= 0");
  if (!m.cell_order.empty()) {
    for (int64_t b = 0; b < budget; ++b) {
      const CellCoord c = pick_cell(m, rng);
      stats.changed += resample_cell(m, c, rng);
      ++stats.visits;
    }
  }
  stats.topics = m.topic_count();
  stats.observations = m.total_observations;
  return stats;
}

RefineStats refine_parallel(SceneModel& m, int64_t budget, int workers, uint64_t seed) {
  if (workers <= 1) {
    Rng rng(seed, 0);
    return refine(m, budget, rng);
  }
  RefineStats stats;
  if (m.cell_order.empty() || budget <= 0) {
    stats.topics = m.topic_count();
    stats.observations = m.total_observations;
    return stats;
  }

  std::atomic<int64_t> remaining{budget};
  std::atomic<int64_t> visits{0};
  std::atomic<int64_t> changed{0};

  auto work = [&](int worker_index) {
    Rng rng(seed, static_cast<uint64_t>(worker_index));
    while (remaining.fetch_sub(1) > 0) {
      Cell* cell = nullptr;
      {
        std::shared_lock lk(m.mu);
        // bounded retry: contended cells are just skipped this round
        for (int attempt = 0; attempt < 4 && !cell; ++attempt) {
          auto it = m.cells.find(pick_cell(m, rng));
          if (it != m.cells.end() && it->second.claim.try_lock()) cell = &it->second;
        }
      }
      if (!cell) continue;
      changed += resample_cell_impl(m, *cell, rng, true);
      ++visits;
      cell->claim.unlock();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
  for (auto& t : threads) t.join();

  stats.visits = visits.load();
  stats.changed = changed.load();
  stats.topics = m.topic_count();
  stats.observations = m.total_observations;
  return stats;
}

int32_t map_topic_of_cell(const SceneModel& m, const CellCoord& c) {
  const Cell* cell = m.find_cell(c);
  if (!cell || cell->topic_hist.empty()) return 0;
  int32_t best = 0;
  int64_t best_count = 0;
  for (const auto& [topic, n] : cell->topic_hist) {
    if (n > best_count) {  // map is ordered, so ties keep the lowest id
      best = topic;
      best_count = n;
    }
  }
  return best;
}

std::vector<double> topic_word_distribution(const SceneModel& m, int32_t topic) {
  const double vbeta = static_cast<double>(m.params.vocab_size) * m.params.beta;
  const double denom = static_cast<double>(m.topic_total(topic)) + vbeta;
  std::vector<double> p(static_cast<size_t>(m.params.vocab_size));
  for (int32_t w = 0; w < m.params.vocab_size; ++w) {
    p[w] = (static_cast<double>(m.word_count(topic, w)) + m.params.beta) / denom;
  }
  return p;
}

}  // namespace scenemap
