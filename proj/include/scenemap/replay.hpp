#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scenemap/core.hpp"
#include "scenemap/transport.hpp"

namespace scenemap {

struct MissionConfig {
  Hyperparameters model;
  int32_t track_spacing = 1;        // cells between lawnmower tracks
  double speed_cells_per_s = 1.0;
  double snapshot_period = 10.0;    // seconds between transmitted snapshots
  int64_t refine_budget_per_step = 8;  // cell visits per ingested cell
  ChannelConfig channel;
  uint64_t seed = 0;

  void validate() const;
};

struct TraceRow {
  double t = 0.0;                 // snapshot time
  size_t bytes = 0;               // encoded map size
  std::optional<double> delivery_time;  // empty when superseded
  std::optional<double> mi;       // vs ground truth, when available
  uint64_t transmission_id = 0;
};

struct MissionResult {
  std::vector<TraceRow> trace;
  SceneMap final_map;
  std::string delivery_log_csv;
  int64_t cells_visited = 0;
  size_t observations_ingested = 0;
  int32_t topics = 0;
};

// Replays a lawnmower survey over the dataset's cell bounding box: each step
// ingests the observations of the current cell, runs the refinement budget,
// and on every snapshot period encodes the current map and enqueues it on the
// channel. Deterministic given the seed (single refinement worker).
MissionResult run_replay(const MissionConfig& cfg, const std::vector<WordObservation>& dataset,
                         const LabelGrid* ground_truth);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace scenemap
