// Acceptance gate: every release-blocking behavior, one pass/fail line each.
// Exits nonzero when any check fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "scenemap/codec.hpp"
#include "scenemap/evaluation.hpp"
#include "scenemap/generative.hpp"
#include "scenemap/inference.hpp"
#include "scenemap/io.hpp"
#include "scenemap/replay.hpp"
#include "scenemap/rng.hpp"
#include "scenemap/transport.hpp"

using namespace scenemap;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int index, const char* name, bool ok, const std::string& detail) {
  std::printf("[%d] %-24s %s  (%s)\n", index, name, ok ? "PASS" : "FAIL", detail.c_str());
  if (!ok) ++failures;
}

// ---------------------------------------------------------------------------
// 1. seating-rule draw frequencies match the enumerated conditional
// ---------------------------------------------------------------------------
void check_seating_oracle() {
  const int kModels = 20;
  const int kDraws = 200000;
  double worst_l1 = 0.0;
  for (int trial = 0; trial < kModels; ++trial) {
    Rng rng(1000 + static_cast<uint64_t>(trial));
    Hyperparameters p;
    p.alpha = rng.uniform(0.05, 2.0);
    p.beta = rng.uniform(0.1, 2.0);
    p.gamma = rng.uniform(0.01, 1.0);
    p.vocab_size = 2 + static_cast<int32_t>(rng.uniform_int(4));  // V <= 5
    SceneModel m(p);
    const int32_t topics = 1 + static_cast<int32_t>(rng.uniform_int(3));  // K <= 3
    const int obs_count = 6 + static_cast<int>(rng.uniform_int(25));
    for (int n = 0; n < obs_count; ++n) {
      WordObservation o;
      o.word = static_cast<int32_t>(rng.uniform_int(p.vocab_size));
      o.pos = {rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 1)};  // <= 3x3x1 cells
      m.force_insert(o, 1 + static_cast<int32_t>(rng.uniform_int(topics)));
    }
    const CellCoord query{rng.uniform_int(3), rng.uniform_int(3), 0};
    const int32_t word = static_cast<int32_t>(rng.uniform_int(p.vocab_size));
    const SeatingWeights w = seating_weights(m, query, word);
    const double total = w.total();

    std::map<int32_t, int64_t> hits;
    Rng draw_rng(7000 + static_cast<uint64_t>(trial));
    for (int d = 0; d < kDraws; ++d) ++hits[draw_seating(w, draw_rng)];

    double l1 = std::abs(static_cast<double>(hits[0]) / kDraws - w.new_topic / total);
    for (const auto& [topic, weight] : w.topics) {
      l1 += std::abs(static_cast<double>(hits[topic]) / kDraws - weight / total);
    }
    worst_l1 = std::max(worst_l1, l1);
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst L1 = %.5f over %d models, tolerance 0.01", worst_l1,
                kModels);
  report(1, "seating-rule oracle", worst_l1 <= 0.01, buf);
}

// ---------------------------------------------------------------------------
// 2. leave-one-out weights equal weights on a model rebuilt without the
//    excluded observation
// ---------------------------------------------------------------------------
void check_leave_one_out() {
  const int kPairs = 1000;
  double worst_rel = 0.0;
  bool structure_ok = true;
  Rng rng(31337);
  for (int trial = 0; trial < kPairs; ++trial) {
    Hyperparameters p;
    p.alpha = rng.uniform(0.05, 1.5);
    p.beta = rng.uniform(0.1, 2.0);
    p.gamma = rng.uniform(0.01, 0.8);
    p.vocab_size = 3 + static_cast<int32_t>(rng.uniform_int(5));
    SceneModel full(p);
    struct Raw {
      WordObservation obs;
      int32_t label;
    };
    std::vector<Raw> raws;
    const int obs_count = 5 + static_cast<int>(rng.uniform_int(40));
    for (int n = 0; n < obs_count; ++n) {
      Raw r;
      r.obs.word = static_cast<int32_t>(rng.uniform_int(p.vocab_size));
      r.obs.pos = {rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0, 2)};
      r.label = 1 + static_cast<int32_t>(rng.uniform_int(3));
      full.force_insert(r.obs, r.label);
      raws.push_back(r);
    }
    const size_t victim = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(raws.size())));
    const CellCoord vc = cell_of(raws[victim].obs.pos, p);
    size_t idx = 0;
    size_t seen = 0;
    for (size_t n = 0; n <= victim; ++n) {
      if (cell_of(raws[n].obs.pos, p) == vc) {
        idx = seen;
        ++seen;
      }
    }

    SceneModel rebuilt(p);
    for (size_t n = 0; n < raws.size(); ++n) {
      if (n != victim) rebuilt.force_insert(raws[n].obs, raws[n].label);
    }

    const CellCoord query{rng.uniform_int(4), rng.uniform_int(4), rng.uniform_int(2)};
    const int32_t word = static_cast<int32_t>(rng.uniform_int(p.vocab_size));
    const ObservationRef excl{vc, idx};
    const SeatingWeights with_excl = seating_weights(full, query, word, excl);
    const SeatingWeights plain = seating_weights(rebuilt, query, word);

    std::map<int32_t, double> a, b;
    for (const auto& [t, w] : with_excl.topics) a[t] = w;
    for (const auto& [t, w] : plain.topics) b[t] = w;
    for (const auto& [t, w] : a) {
      const double other = b.count(t) ? b[t] : 0.0;
      const double rel = std::abs(w - other) / std::max(1e-300, std::max(w, other));
      worst_rel = std::max(worst_rel, rel);
    }
    for (const auto& [t, w] : b) {
      if (!a.count(t)) structure_ok = false;
    }
    const double rel_new = std::abs(with_excl.new_topic - plain.new_topic) /
                           std::max(1e-300, std::max(with_excl.new_topic, plain.new_topic));
    worst_rel = std::max(worst_rel, rel_new);
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst relative error = %.3g over %d pairs, tolerance 1e-12",
                worst_rel, kPairs);
  report(2, "leave-one-out exactness", structure_ok && worst_rel <= 1e-12, buf);
}

// ---------------------------------------------------------------------------
// 3. semantic recovery on a synthetic world
//    fixture frozen after the pilot scan in docs/recovery-calibration.md
// ---------------------------------------------------------------------------
void check_recovery() {
  GenerativeConfig gen;
  gen.params.alpha = 0.01;
  gen.params.gamma = 1e-4;
  gen.width = gen.height = 30;
  gen.seed = 29;  // pilot-calibrated: first seeds giving >= 2 topics are 9 and 29
  const LabelGrid world = sample_world(gen);

  Hyperparameters wordgen = gen.params;
  wordgen.vocab_size = 50;
  wordgen.beta = 0.1;
  const std::vector<WordObservation> dataset =
      sample_observations(world, wordgen, {}, 20, Eigen::Matrix3d::Zero(), 29).observations;

  MissionConfig cfg;
  cfg.model = wordgen;
  cfg.refine_budget_per_step = 200;  // 900 visited cells x 200 = 200 full sweeps
  cfg.seed = 1;
  const MissionResult r = run_replay(cfg, dataset, &world);
  const MiScore s = mi_score(to_label_grid(r.final_map), world);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "normalized MI = %.4f, threshold 0.60, world topics = %d",
                s.normalized(), world.distinct_labels());
  report(3, "synthetic recovery", s.normalized() >= 0.6, buf);
}

// ---------------------------------------------------------------------------
// 4. codec round trips and compressibility ordering
// ---------------------------------------------------------------------------
void check_codec() {
  Rng rng(404040);
  int exact = 0;
  const int kMaps = 1000;
  for (int trial = 0; trial < kMaps; ++trial) {
    SceneMap map;
    // a few full-size maps, the rest small for speed; all <= 256x256
    const int32_t cap = trial % 100 == 0 ? 256 : 48;
    map.width = 1 + static_cast<int32_t>(rng.uniform_int(cap));
    map.height = 1 + static_cast<int32_t>(rng.uniform_int(cap));
    map.origin_i = rng.uniform_int(1000) - 500;
    map.origin_j = rng.uniform_int(1000) - 500;
    map.cell_size_x = rng.uniform(0.1, 5.0);
    map.cell_size_y = rng.uniform(0.1, 5.0);
    const int32_t labels = 1 + static_cast<int32_t>(rng.uniform_int(255));
    for (int32_t l = 0; l < labels; ++l) map.palette.push_back(l * 3 + 1);
    map.labels.resize(static_cast<size_t>(map.width) * map.height);
    for (auto& v : map.labels) v = static_cast<int32_t>(rng.uniform_int(labels + 1));
    if (decode_map(encode_map(map)) == map) ++exact;
  }

  int uniform_smaller = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SceneMap uniform;
    uniform.width = uniform.height = 48;
    for (int32_t l = 1; l <= 10; ++l) uniform.palette.push_back(l);
    uniform.labels.assign(48 * 48, 1 + static_cast<int32_t>(rng.uniform_int(10)));
    SceneMap noisy = uniform;
    for (auto& v : noisy.labels) v = 1 + static_cast<int32_t>(rng.uniform_int(10));
    if (encoded_size(uniform) < encoded_size(noisy)) ++uniform_smaller;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d/%d exact round trips; uniform smaller in %d/100 (need 95)",
                exact, kMaps, uniform_smaller);
  report(4, "codec round trip", exact == kMaps && uniform_smaller >= 95, buf);
}

// ---------------------------------------------------------------------------
// 5. bandwidth tunability: distinct labels vs encoded bytes across the
//    hyperparameter grid on a fixed synthetic dataset
// ---------------------------------------------------------------------------
void check_bandwidth_tunability() {
  GenerativeConfig gen;
  gen.params.alpha = 0.001;
  gen.params.gamma = 0.01;
  gen.width = gen.height = 30;
  gen.seed = 4;  // 4 topics, 10 patches
  const LabelGrid world = sample_world(gen);

  Hyperparameters wordgen = gen.params;
  wordgen.vocab_size = 50;
  wordgen.beta = 0.1;
  const std::vector<WordObservation> dataset =
      sample_observations(world, wordgen, {}, 20, Eigen::Matrix3d::Zero(), 11).observations;

  GridSearchSpec spec;
  spec.alphas = {1.0, 0.1, 0.01, 0.001};
  spec.betas = {10.0, 1.0, 0.1};
  spec.gammas = {1e-3, 1e-4, 1e-5};
  spec.vocab_size = 50;
  spec.seeds = {0};
  const GridSearchResult result = grid_search(spec, dataset, world, 20000);

  std::vector<double> labels, bytes;
  int failed = 0;
  for (const GridSearchRow& row : result.rows) {
    if (row.failed) {
      ++failed;
      continue;
    }
    labels.push_back(static_cast<double>(row.distinct_labels));
    bytes.push_back(static_cast<double>(row.encoded_bytes));
  }
  const double rho = labels.size() >= 2 ? spearman(labels, bytes) : 0.0;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "Spearman rho = %.4f over %zu grid points (%d failed), need > 0.8",
                rho, labels.size(), failed);
  report(5, "bandwidth tunability", rho > 0.8 && failed == 0, buf);
}

// ---------------------------------------------------------------------------
// 6. mutual-information identities
// ---------------------------------------------------------------------------
void check_mi_identities() {
  bool ok = true;
  std::string why = "all identities hold";

  // MI(Z, Z) = H(Z)
  LabelGrid z;
  z.width = 4;
  z.height = 3;
  z.labels = {1, 2, 3, 1, 2, 2, 1, 3, 3, 3, 1, 2};
  const MiScore self = mi_score(z, z);
  if (std::abs(self.mi - self.h_left) > 1e-9) {
    ok = false;
    why = "MI(Z,Z) != H(Z)";
  }

  // MI against a constant grid is exactly zero
  LabelGrid constant = z;
  constant.labels.assign(z.labels.size(), 5);
  if (mutual_information(z, constant) != 0.0) {
    ok = false;
    why = "MI against constant grid != 0";
  }

  // permutation invariance, exact
  LabelGrid permuted = z;
  for (auto& v : permuted.labels) v = v == 1 ? 9 : (v == 2 ? 4 : 6);
  LabelGrid other;
  other.width = 4;
  other.height = 3;
  other.labels = {2, 2, 1, 1, 3, 1, 2, 2, 1, 3, 3, 1};
  if (mutual_information(z, other) != mutual_information(permuted, other)) {
    ok = false;
    why = "label permutation changed MI";
  }

  // two balanced labels, identical grids: ln 2
  LabelGrid half;
  half.width = 2;
  half.height = 2;
  half.labels = {1, 1, 2, 2};
  const double ln2_err = std::abs(mutual_information(half, half) - std::log(2.0));
  if (ln2_err > 1e-9) {
    ok = false;
    why = "two-label case != ln 2";
  }

  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s; ln2 error = %.2g", why.c_str(), ln2_err);
  report(6, "mi identities", ok, buf);
}

// ---------------------------------------------------------------------------
// 7. channel timing exactness and throughput ceiling
// ---------------------------------------------------------------------------
void check_channel() {
  ChannelConfig raw;
  raw.per_packet_overhead = 0;
  Channel ch(raw);
  const std::vector<uint8_t> payload(1250, 0x55);
  const uint64_t id = ch.enqueue(payload, 0.0);
  ch.step(2.0);
  const bool exact = ch.record(id).delivery_time && *ch.record(id).delivery_time == 1.0;

  // fuzz: cumulative delivered wire bytes never outrun the configured rate
  Rng rng(777);
  ChannelConfig cfg;
  Channel fuzz(cfg, false);
  size_t wire = 0;
  bool ceiling_ok = true;
  double t_enq = 0.0;
  for (int tick = 0; tick < 10000; ++tick) {
    if (rng.uniform() < 0.25) {
      fuzz.enqueue(std::vector<uint8_t>(1 + rng.uniform_int(3000), 0), t_enq);
    }
    for (uint64_t did : fuzz.step(0.01 + rng.uniform() * 0.25)) {
      const Transmission& tr = fuzz.record(did);
      wire += tr.wire_bytes;
      if (static_cast<double>(wire) * 8.0 / cfg.rate_bps > *tr.delivery_time + 1e-6) {
        ceiling_ok = false;
      }
    }
    t_enq = fuzz.now();
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "1250 B @ 10 kbit/s -> %.10g s (want 1.0); rate ceiling %s",
                ch.record(id).delivery_time.value_or(-1.0), ceiling_ok ? "held" : "violated");
  report(7, "channel timing", exact && ceiling_ok, buf);
}

// ---------------------------------------------------------------------------
// 8. replay determinism through the command-line tool
// ---------------------------------------------------------------------------
void check_replay_determinism() {
  const fs::path base = fs::temp_directory_path() / "scenemap_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);

  GenerativeConfig gen;
  gen.params.alpha = 0.005;
  gen.params.gamma = 0.02;
  gen.width = gen.height = 12;
  gen.seed = 6;
  write_label_grid((base / "world.grid").string(), sample_world(gen));

  bool runs_ok = true;
  for (int run = 0; run < 3; ++run) {
    std::ostringstream cmd;
    cmd << SCENEMAP_CLI_PATH << " replay --world " << (base / "world.grid").string()
        << " --out-dir " << (base / ("run" + std::to_string(run))).string()
        << " --seed 17 --refine-budget 20 --words-per-cell 8 --vocab 30 > /dev/null";
    if (std::system(cmd.str().c_str()) != 0) runs_ok = false;
  }

  bool identical = runs_ok;
  for (const char* file : {"trace.csv", "final.grid", "final.smz", "delivery.csv"}) {
    if (!runs_ok) break;
    const auto a = read_binary_file((base / "run0" / file).string());
    for (int run = 1; run < 3; ++run) {
      if (read_binary_file((base / ("run" + std::to_string(run)) / file).string()) != a) {
        identical = false;
      }
    }
  }
  report(8, "replay determinism", identical,
         runs_ok ? "trace.csv, final.grid, final.smz, delivery.csv byte-identical across 3 runs"
                 : "command-line replay failed");
  fs::remove_all(base);
}

// ---------------------------------------------------------------------------
// 9. grid-search argmax equals an independent recompute from the emitted table
// ---------------------------------------------------------------------------
void check_gridsearch_argmax() {
  GenerativeConfig gen;
  gen.params.alpha = 0.005;
  gen.params.gamma = 0.02;
  gen.width = gen.height = 10;
  gen.seed = 2;
  const LabelGrid world = sample_world(gen);
  Hyperparameters wordgen = gen.params;
  wordgen.vocab_size = 15;
  const std::vector<WordObservation> dataset =
      sample_observations(world, wordgen, {}, 5, Eigen::Matrix3d::Zero(), 3).observations;

  GridSearchSpec spec;
  spec.alphas = {0.1, 0.01};
  spec.betas = {1.0, 0.1};
  spec.gammas = {1e-3, 1e-4};
  spec.vocab_size = 15;
  spec.seeds = {0, 1};
  const GridSearchResult result = grid_search(spec, dataset, world, 2000);

  // independent recompute: parse the emitted csv, average, argmax with ties
  // to the lexicographically smallest point
  std::map<std::tuple<double, double, double>, std::pair<double, int>> agg;
  std::istringstream csv(scatter_table_csv(result.rows));
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    for (auto& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream row(line);
    double a, b, g, mi_ann, mi_ref;
    unsigned long long seed;
    size_t bytes;
    int distinct;
    row >> a >> b >> g >> seed >> mi_ann >> mi_ref >> bytes >> distinct;
    auto& [sum, cnt] = agg[{a, b, g}];
    sum += mi_ann;
    ++cnt;
  }
  bool have = false;
  std::tuple<double, double, double> best;
  double best_mean = 0;
  for (const auto& [key, sc] : agg) {
    const double mean = sc.first / sc.second;
    if (!have || mean > best_mean) {
      have = true;
      best_mean = mean;
      best = key;
    }
  }
  const bool match = have && std::get<0>(best) == result.best_alpha &&
                     std::get<1>(best) == result.best_beta && std::get<2>(best) == result.best_gamma;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "library (%g, %g, %g) vs recomputed (%g, %g, %g)",
                result.best_alpha, result.best_beta, result.best_gamma, std::get<0>(best),
                std::get<1>(best), std::get<2>(best));
  report(9, "grid-search argmax", match, buf);
}

}  // namespace

int main() {
  check_seating_oracle();
  check_leave_one_out();
  check_recovery();
  check_codec();
  check_bandwidth_tunability();
  check_mi_identities();
  check_channel();
  check_replay_determinism();
  check_gridsearch_argmax();
  std::printf("%s: %d of 9 checks failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
