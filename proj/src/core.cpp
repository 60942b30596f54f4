#include "scenemap/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace scenemap {

void Hyperparameters::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  for (double s : cell_size) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("cell_size must be > 0 on every axis");
  }
}

SceneModel::SceneModel(Hyperparameters p) : params(p) { params.validate(); }

int32_t SceneModel::topic_count() const {
  int32_t k = 0;
  for (int64_t n : topic_totals) k += (n > 0);
  return k;
}

std::vector<int32_t> SceneModel::active_topics() const {
  std::vector<int32_t> out;
  for (size_t idx = 0; idx < topic_totals.size(); ++idx) {
    if (topic_totals[idx] > 0) out.push_back(static_cast<int32_t>(idx) + 1);
  }
  return out;
}

int64_t SceneModel::topic_total(int32_t topic) const {
  if (topic < 1 || topic >= next_topic_id) return 0;
  return topic_totals[topic - 1];
}

int64_t SceneModel::word_count(int32_t topic, int32_t word) const {
  if (topic < 1 || topic >= next_topic_id) return 0;
  return topic_word_counts[topic - 1][word];
}

Cell& SceneModel::cell_at(const CellCoord& c) {
  auto [it, inserted] = cells.try_emplace(c);
  if (inserted) {
    it->second.coord = c;
    cell_order.push_back(c);
  }
  return it->second;
}

const Cell* SceneModel::find_cell(const CellCoord& c) const {
  auto it = cells.find(c);
  return it == cells.end() ? nullptr : &it->second;
}

int32_t SceneModel::allocate_topic() {
  const int32_t id = next_topic_id++;
  topic_totals.push_back(0);
  topic_word_counts.emplace_back(params.vocab_size, 0);
  return id;
}

void SceneModel::touch(const CellCoord& c) {
  recent.push_back(c);
  while (recent.size() > recent_window) recent.pop_front();
}

void SceneModel::add_counts(Cell& cell, int32_t word, int32_t label) {
  ++cell.topic_hist[label];
  ++topic_word_counts[label - 1][word];
  ++topic_totals[label - 1];
}

void SceneModel::remove_counts(Cell& cell, int32_t word, int32_t label) {
  auto it = cell.topic_hist.find(label);
  if (--it->second == 0) cell.topic_hist.erase(it);
  --topic_word_counts[label - 1][word];
  --topic_totals[label - 1];
}

void SceneModel::force_insert(const WordObservation& obs, int32_t label) {
  if (obs.word < 0 || obs.word >= params.vocab_size) throw std::invalid_argument("word id out of vocabulary");
  if (label < 1) throw std::invalid_argument("topic label must be >= 1");
  while (label >= next_topic_id) allocate_topic();
  Cell& cell = cell_at(cell_of(obs.pos, params));
  cell.words.push_back(obs.word);
  cell.labels.push_back(label);
  add_counts(cell, obs.word, label);
  ++total_observations;
  touch(cell.coord);
}

CellCoord cell_of(const std::array<double, 3>& pos, const Hyperparameters& p) {
  for (double v : pos) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite observation position");
  }
  return CellCoord{
      static_cast<int64_t>(std::floor(pos[0] / p.cell_size[0])),
      static_cast<int64_t>(std::floor(pos[1] / p.cell_size[1])),
      static_cast<int64_t>(std::floor(pos[2] / p.cell_size[2])),
  };
}

std::vector<CellCoord> neighbors(const CellCoord& c, Neighborhood mode) {
  std::vector<CellCoord> out{
      {c.i - 1, c.j, c.k}, {c.i + 1, c.j, c.k},
      {c.i, c.j - 1, c.k}, {c.i, c.j + 1, c.k},
  };
  if (mode == Neighborhood::VonNeumann3D) {
    out.push_back({c.i, c.j, c.k - 1});
    out.push_back({c.i, c.j, c.k + 1});
  }
  return out;
}

std::map<int32_t, int64_t> neighborhood_topic_counts(const SceneModel& m, const CellCoord& c) {
  std::map<int32_t, int64_t> out;
  auto accumulate = [&](const CellCoord& cc) {
    if (const Cell* cell = m.find_cell(cc)) {
      for (const auto& [topic, n] : cell->topic_hist) out[topic] += n;
    }
  };
  accumulate(c);
  for (const CellCoord& n : neighbors(c, m.params.neighborhood)) accumulate(n);
  return out;
}

CountTables aggregate_counts(const SceneModel& m) {
  CountTables t;
  t.totals.assign(m.topic_totals.size(), 0);
  t.words.assign(m.topic_word_counts.size(), std::vector<int64_t>(m.params.vocab_size, 0));
  for (const CellCoord& c : m.cell_order) {
    const Cell& cell = *m.find_cell(c);
    for (size_t n = 0; n < cell.words.size(); ++n) {
      const int32_t label = cell.labels[n];
      ++t.totals[label - 1];
      ++t.words[label - 1][cell.words[n]];
    }
  }
  return t;
}

bool globally_consistent(const SceneModel& m) {
  const CountTables t = aggregate_counts(m);
  if (t.totals != m.topic_totals || t.words != m.topic_word_counts) return false;
  for (const CellCoord& c : m.cell_order) {
    const Cell& cell = *m.find_cell(c);
    if (cell.words.size() != cell.labels.size()) return false;
    std::map<int32_t, int64_t> hist;
    for (int32_t l : cell.labels) ++hist[l];
    if (hist != cell.topic_hist) return false;
  }
  return true;
}

int32_t SceneMap::distinct_labels() const {
  std::set<int32_t> seen;
  for (int32_t l : labels) {
    if (l != 0) seen.insert(l);
  }
  return static_cast<int32_t>(seen.size());
}

int32_t LabelGrid::distinct_labels() const {
  std::set<int32_t> seen;
  for (int32_t l : labels) {
    if (l != 0) seen.insert(l);
  }
  return static_cast<int32_t>(seen.size());
}

}  // namespace scenemap
