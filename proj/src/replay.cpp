#include "scenemap/replay.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "scenemap/codec.hpp"
#include "scenemap/evaluation.hpp"
#include "scenemap/inference.hpp"
#include "scenemap/mapping.hpp"
#include "scenemap/rng.hpp"

namespace scenemap {

void MissionConfig::validate() const {
  model.validate();
  channel.validate();
  if (track_spacing < 1) throw std::invalid_argument("track spacing must be >= 1");
  if (!(snapshot_period > 0.0)) throw std::invalid_argument("snapshot period must be > 0");
  if (!(speed_cells_per_s > 0.0)) throw std::invalid_argument("speed must be > 0");
  if (refine_budget_per_step < 0) throw std::invalid_argument("refine budget must be >= 0");
}

MissionResult run_replay(const MissionConfig& cfg, const std::vector<WordObservation>& dataset,
                         const LabelGrid* ground_truth) {
  cfg.validate();
  MissionResult result;
  if (dataset.empty()) return result;  // zero-length trajectory

  // bucket observations by flattened (i, j) column
  std::map<std::pair<int64_t, int64_t>, std::vector<const WordObservation*>> columns;
  int64_t min_i = 0, max_i = 0, min_j = 0, max_j = 0;
  bool first = true;
  for (const WordObservation& obs : dataset) {
    const CellCoord c = cell_of(obs.pos, cfg.model);
    columns[{c.i, c.j}].push_back(&obs);
    if (first) {
      min_i = max_i = c.i;
      min_j = max_j = c.j;
      first = false;
    } else {
      min_i = std::min(min_i, c.i);
      max_i = std::max(max_i, c.i);
      min_j = std::min(min_j, c.j);
      max_j = std::max(max_j, c.j);
    }
  }

  SceneModel model(cfg.model);
  Rng ingest_rng(cfg.seed, 0);
  Rng refine_rng(cfg.seed, 1);
  Channel channel(cfg.channel);

  const double dt = 1.0 / cfg.speed_cells_per_s;
  double t = 0.0;
  double next_snapshot = cfg.snapshot_period;

  auto take_snapshot = [&](double when) {
    const SceneMap snap = snapshot_scene_map(model);
    if (snap.width == 0) return;
    const std::vector<uint8_t> wire = to_wire(encode_map(snap));
    TraceRow row;
    row.t = when;
    row.bytes = wire.size();
    row.transmission_id = channel.enqueue(wire, when);
    if (ground_truth) {
      try {
        row.mi = mutual_information(snap, *ground_truth);
      } catch (const std::runtime_error&) {
        // no labeled overlap yet
      }
    }
    result.trace.push_back(row);
  };

  // serpentine lawnmower over the dataset bounding box
  bool reverse = false;
  for (int64_t j = min_j; j <= max_j; j += cfg.track_spacing) {
    for (int64_t step = 0; step <= max_i - min_i; ++step) {
      const int64_t i = reverse ? max_i - step : min_i + step;
      auto it = columns.find({i, j});
      if (it != columns.end()) {
        for (const WordObservation* obs : it->second) insert_observation(model, *obs, ingest_rng);
      }
      refine(model, cfg.refine_budget_per_step, refine_rng);
      ++result.cells_visited;
      t += dt;
      channel.step(dt);
      if (t >= next_snapshot) {
        take_snapshot(t);
        next_snapshot += cfg.snapshot_period;
      }
    }
    reverse = !reverse;
  }

  take_snapshot(t);  // final state always goes out
  channel.drain();

  for (TraceRow& row : result.trace) {
    const Transmission& tr = channel.record(row.transmission_id);
    if (!tr.superseded) row.delivery_time = tr.delivery_time;
  }

  result.final_map = snapshot_scene_map(model);
  result.delivery_log_csv = channel.delivery_log_csv();
  result.observations_ingested = model.total_observations;
  result.topics = model.topic_count();
  return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "time,bytes,delivery_time,mi\n";
  char buf[64];
  for (const TraceRow& row : trace) {
    std::snprintf(buf, sizeof(buf), "%.10g", row.t);
    out << buf << ',' << row.bytes << ',';
    if (row.delivery_time) {
      std::snprintf(buf, sizeof(buf), "%.10g", *row.delivery_time);
      out << buf;
    }
    out << ',';
    if (row.mi) {
      std::snprintf(buf, sizeof(buf), "%.10g", *row.mi);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace scenemap
