#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "scenemap/codec.hpp"
#include "scenemap/evaluation.hpp"
#include "scenemap/generative.hpp"
#include "scenemap/io.hpp"
#include "scenemap/replay.hpp"

namespace fs = std::filesystem;
using namespace scenemap;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_manifest(const std::string& path, const std::map<std::string, std::string>& kv) {
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  write_text_file(path, out.str());
}

// 4-connected patches of equal label
struct PatchStats {
  int64_t patches = 0;
  double mean_size = 0.0;
};

PatchStats patch_stats(const LabelGrid& grid) {
  PatchStats stats;
  if (grid.labels.empty()) return stats;
  std::vector<char> seen(grid.labels.size(), 0);
  std::vector<size_t> stack;
  int64_t covered = 0;
  for (size_t start = 0; start < grid.labels.size(); ++start) {
    if (seen[start]) continue;
    const int32_t label = grid.labels[start];
    ++stats.patches;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const size_t at = stack.back();
      stack.pop_back();
      ++covered;
      const int32_t col = static_cast<int32_t>(at % grid.width);
      const int32_t row = static_cast<int32_t>(at / grid.width);
      const std::pair<int32_t, int32_t> adj[4] = {
          {col - 1, row}, {col + 1, row}, {col, row - 1}, {col, row + 1}};
      for (const auto& [c, r] : adj) {
        if (c < 0 || c >= grid.width || r < 0 || r >= grid.height) continue;
        const size_t n = static_cast<size_t>(r) * grid.width + c;
        if (!seen[n] && grid.labels[n] == label) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
  }
  stats.mean_size = static_cast<double>(covered) / static_cast<double>(stats.patches);
  return stats;
}

SceneMap scene_map_from_grid(const LabelGrid& grid) {
  SceneMap map;
  map.origin_i = grid.origin_i;
  map.origin_j = grid.origin_j;
  map.width = grid.width;
  map.height = grid.height;
  map.cell_size_x = map.cell_size_y = grid.cell_size;
  map.labels.resize(grid.labels.size());
  std::map<int32_t, int32_t> compact;
  for (size_t n = 0; n < grid.labels.size(); ++n) {
    const int32_t v = grid.labels[n];
    if (v == 0) continue;
    auto [it, inserted] = compact.try_emplace(v, 0);
    if (inserted) {
      it->second = static_cast<int32_t>(map.palette.size()) + 1;
      map.palette.push_back(v);
    }
    map.labels[n] = it->second;
  }
  return map;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenemap: bandwidth-tunable semantic scene mapping"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; any key is overridable by its flag");

  // ---- sample-world ----
  auto* sw = app.add_subcommand("sample-world", "sample a random world from the scene prior");
  struct {
    std::string out;
    int32_t width = 64, height = 64, customers = 5;
    double alpha = 0.01, gamma = 1e-3, cell_size = 1.0;
    uint64_t seed = 0;
    bool shuffled = false;
  } sw_opt;
  sw->add_option("--out", sw_opt.out, "output world grid file")->required();
  sw->add_option("--width", sw_opt.width);
  sw->add_option("--height", sw_opt.height);
  sw->add_option("--alpha", sw_opt.alpha);
  sw->add_option("--gamma", sw_opt.gamma);
  sw->add_option("--cell-size", sw_opt.cell_size);
  sw->add_option("--customers", sw_opt.customers, "customers seated per cell");
  sw->add_option("--seed", sw_opt.seed);
  sw->add_flag("--shuffled-order", sw_opt.shuffled, "shuffle the cell visitation order");

  // ---- replay ----
  auto* rp = app.add_subcommand("replay", "simulate a lawnmower survey over a dataset or world");
  struct {
    std::string world, dataset, out_dir;
    double alpha = 0.1, beta = 0.5, gamma = 1e-4, cell_size = 1.0;
    int32_t vocab = 0;
    int32_t words_per_cell = 10;
    double gen_beta = 0.1, noise_sigma = 0.0;
    int32_t track_spacing = 1;
    double speed = 1.0, snapshot_period = 10.0;
    int64_t refine_budget = 8;
    double rate = 10000.0;
    int32_t packet_size = 256, overhead = 16;
    uint64_t seed = 0;
    bool flat = false;
  } rp_opt;
  rp->add_option("--world", rp_opt.world, "ground-truth world grid; also the dataset source when no --dataset");
  rp->add_option("--dataset", rp_opt.dataset, "pre-tokenized observation stream");
  rp->add_option("--out-dir", rp_opt.out_dir)->required();
  rp->add_option("--alpha", rp_opt.alpha);
  rp->add_option("--beta", rp_opt.beta);
  rp->add_option("--gamma", rp_opt.gamma);
  rp->add_option("--cell-size", rp_opt.cell_size);
  rp->add_option("--vocab", rp_opt.vocab, "vocabulary size; 0 = infer from the dataset");
  rp->add_option("--words-per-cell", rp_opt.words_per_cell, "when generating from --world");
  rp->add_option("--gen-beta", rp_opt.gen_beta, "Dirichlet concentration of the generated word model");
  rp->add_option("--noise-sigma", rp_opt.noise_sigma, "isotropic position noise stddev (m)");
  rp->add_option("--track-spacing", rp_opt.track_spacing);
  rp->add_option("--speed", rp_opt.speed, "cells per second");
  rp->add_option("--snapshot-period", rp_opt.snapshot_period);
  rp->add_option("--refine-budget", rp_opt.refine_budget, "cell visits per step");
  rp->add_option("--rate", rp_opt.rate, "channel bits per second");
  rp->add_option("--packet-size", rp_opt.packet_size);
  rp->add_option("--overhead", rp_opt.overhead);
  rp->add_flag("--flat", rp_opt.flat, "2D Von Neumann neighborhood");
  rp->add_option("--seed", rp_opt.seed)->required();

  // ---- tune ----
  auto* tn = app.add_subcommand("tune", "hyperparameter grid search by mutual information");
  struct {
    std::string dataset, annotations, reference, out_dir;
    std::string alphas = "1.0,0.1,0.01,0.001";
    std::string betas = "10.0,1.0,0.1";
    std::string gammas = "1e-3,1e-4,1e-5";
    double cell_size = 1.0;
    int32_t vocab = 0, num_seeds = 3;
    int64_t refine_budget = 20000;
    uint64_t seed = 0;
    int parallelism = 0;
    bool flat = false;
  } tn_opt;
  tn->add_option("--dataset", tn_opt.dataset)->required();
  tn->add_option("--annotations", tn_opt.annotations)->required();
  tn->add_option("--reference", tn_opt.reference, "reference label grid for the second MI column");
  tn->add_option("--out-dir", tn_opt.out_dir)->required();
  tn->add_option("--alphas", tn_opt.alphas, "comma list");
  tn->add_option("--betas", tn_opt.betas, "comma list");
  tn->add_option("--gammas", tn_opt.gammas, "comma list");
  tn->add_option("--cell-size", tn_opt.cell_size);
  tn->add_option("--vocab", tn_opt.vocab, "0 = infer from the dataset");
  tn->add_option("--num-seeds", tn_opt.num_seeds, "replicate seeds per grid point");
  tn->add_option("--refine-budget", tn_opt.refine_budget);
  tn->add_option("--parallelism", tn_opt.parallelism, "worker threads; 0 = hardware");
  tn->add_flag("--flat", tn_opt.flat);
  tn->add_option("--seed", tn_opt.seed)->required();

  // ---- encode / decode / score ----
  auto* en = app.add_subcommand("encode", "compress a label grid to the wire format");
  struct {
    std::string in, out;
  } en_opt;
  en->add_option("--in", en_opt.in)->required();
  en->add_option("--out", en_opt.out)->required();

  auto* de = app.add_subcommand("decode", "decompress a wire-format map back to a label grid");
  struct {
    std::string in, out, pgm;
  } de_opt;
  de->add_option("--in", de_opt.in)->required();
  de->add_option("--out", de_opt.out)->required();
  de->add_option("--pgm", de_opt.pgm, "optional portable graymap preview");

  auto* sc = app.add_subcommand("score", "mutual information between two label grids");
  struct {
    std::string map, against;
  } sc_opt;
  sc->add_option("--map", sc_opt.map)->required();
  sc->add_option("--against", sc_opt.against)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sw) {
      GenerativeConfig cfg;
      cfg.params.alpha = sw_opt.alpha;
      cfg.params.gamma = sw_opt.gamma;
      cfg.params.cell_size = {sw_opt.cell_size, sw_opt.cell_size, sw_opt.cell_size};
      cfg.width = sw_opt.width;
      cfg.height = sw_opt.height;
      cfg.customers_per_cell = sw_opt.customers;
      cfg.seed = sw_opt.seed;
      cfg.shuffled_order = sw_opt.shuffled;
      const LabelGrid world = sample_world(cfg);
      write_label_grid(sw_opt.out, world);
      const PatchStats stats = patch_stats(world);
      std::cout << "topics=" << world.distinct_labels() << "\npatches=" << stats.patches
                << "\nmean_patch_size=" << format_double(stats.mean_size) << '\n';
      write_manifest(sw_opt.out + ".manifest",
                     {{"command", "sample-world"},
                      {"out", sw_opt.out},
                      {"width", std::to_string(sw_opt.width)},
                      {"height", std::to_string(sw_opt.height)},
                      {"alpha", format_double(sw_opt.alpha)},
                      {"gamma", format_double(sw_opt.gamma)},
                      {"cell_size", format_double(sw_opt.cell_size)},
                      {"customers", std::to_string(sw_opt.customers)},
                      {"shuffled_order", sw_opt.shuffled ? "1" : "0"},
                      {"seed", std::to_string(sw_opt.seed)}});
    } else if (*rp) {
      if (rp_opt.world.empty() && rp_opt.dataset.empty()) {
        throw std::runtime_error("replay needs --world and/or --dataset");
      }
      fs::create_directories(rp_opt.out_dir);

      LabelGrid world;
      const bool have_world = !rp_opt.world.empty();
      if (have_world) world = read_label_grid(rp_opt.world);

      MissionConfig cfg;
      cfg.model.alpha = rp_opt.alpha;
      cfg.model.beta = rp_opt.beta;
      cfg.model.gamma = rp_opt.gamma;
      cfg.model.cell_size = {rp_opt.cell_size, rp_opt.cell_size, rp_opt.cell_size};
      cfg.model.neighborhood = rp_opt.flat ? Neighborhood::VonNeumann2D : Neighborhood::VonNeumann3D;
      cfg.track_spacing = rp_opt.track_spacing;
      cfg.speed_cells_per_s = rp_opt.speed;
      cfg.snapshot_period = rp_opt.snapshot_period;
      cfg.refine_budget_per_step = rp_opt.refine_budget;
      cfg.channel.rate_bps = rp_opt.rate;
      cfg.channel.packet_size = rp_opt.packet_size;
      cfg.channel.per_packet_overhead = rp_opt.overhead;
      cfg.seed = rp_opt.seed;

      std::vector<WordObservation> dataset;
      if (!rp_opt.dataset.empty()) {
        dataset = read_observation_stream(rp_opt.dataset);
      } else {
        cfg.model.vocab_size = rp_opt.vocab > 0 ? rp_opt.vocab : 50;
        Hyperparameters gen = cfg.model;
        gen.beta = rp_opt.gen_beta;
        dataset = sample_observations(world, gen, {}, rp_opt.words_per_cell,
                                      Eigen::Matrix3d::Identity() * rp_opt.noise_sigma *
                                          rp_opt.noise_sigma,
                                      rp_opt.seed ^ 0x5eedf00dULL)
                      .observations;
      }
      if (rp_opt.vocab > 0) {
        cfg.model.vocab_size = rp_opt.vocab;
      } else if (!dataset.empty()) {
        int32_t top = 0;
        for (const WordObservation& o : dataset) top = std::max(top, o.word);
        cfg.model.vocab_size = top + 1;
      }

      const MissionResult result = run_replay(cfg, dataset, have_world ? &world : nullptr);

      write_text_file(rp_opt.out_dir + "/trace.csv", trace_csv(result.trace));
      write_text_file(rp_opt.out_dir + "/delivery.csv", result.delivery_log_csv);
      write_label_grid(rp_opt.out_dir + "/final.grid", to_label_grid(result.final_map));
      write_binary_file(rp_opt.out_dir + "/final.smz", to_wire(encode_map(result.final_map)));
      write_manifest(rp_opt.out_dir + "/manifest.txt",
                     {{"command", "replay"},
                      {"world", rp_opt.world},
                      {"dataset", rp_opt.dataset},
                      {"alpha", format_double(rp_opt.alpha)},
                      {"beta", format_double(rp_opt.beta)},
                      {"gamma", format_double(rp_opt.gamma)},
                      {"cell_size", format_double(rp_opt.cell_size)},
                      {"vocab", std::to_string(cfg.model.vocab_size)},
                      {"words_per_cell", std::to_string(rp_opt.words_per_cell)},
                      {"gen_beta", format_double(rp_opt.gen_beta)},
                      {"noise_sigma", format_double(rp_opt.noise_sigma)},
                      {"track_spacing", std::to_string(rp_opt.track_spacing)},
                      {"speed", format_double(rp_opt.speed)},
                      {"snapshot_period", format_double(rp_opt.snapshot_period)},
                      {"refine_budget", std::to_string(rp_opt.refine_budget)},
                      {"rate", format_double(rp_opt.rate)},
                      {"packet_size", std::to_string(rp_opt.packet_size)},
                      {"overhead", std::to_string(rp_opt.overhead)},
                      {"flat", rp_opt.flat ? "1" : "0"},
                      {"seed", std::to_string(rp_opt.seed)}});
      std::cout << "cells_visited=" << result.cells_visited
                << "\nobservations=" << result.observations_ingested
                << "\ntopics=" << result.topics << "\nsnapshots=" << result.trace.size() << '\n';
    } else if (*tn) {
      fs::create_directories(tn_opt.out_dir);
      const std::vector<WordObservation> dataset = read_observation_stream(tn_opt.dataset);
      const LabelGrid annotations = read_label_grid(tn_opt.annotations);
      LabelGrid reference;
      const bool have_ref = !tn_opt.reference.empty();
      if (have_ref) reference = read_label_grid(tn_opt.reference);

      GridSearchSpec spec;
      spec.alphas = parse_list(tn_opt.alphas);
      spec.betas = parse_list(tn_opt.betas);
      spec.gammas = parse_list(tn_opt.gammas);
      spec.cell_size = {tn_opt.cell_size, tn_opt.cell_size, tn_opt.cell_size};
      spec.neighborhood = tn_opt.flat ? Neighborhood::VonNeumann2D : Neighborhood::VonNeumann3D;
      if (tn_opt.vocab > 0) {
        spec.vocab_size = tn_opt.vocab;
      } else {
        int32_t top = 0;
        for (const WordObservation& o : dataset) top = std::max(top, o.word);
        spec.vocab_size = top + 1;
      }
      spec.seeds.clear();
      for (int32_t s = 0; s < tn_opt.num_seeds; ++s) spec.seeds.push_back(tn_opt.seed + s);

      const GridSearchResult result =
          grid_search(spec, dataset, annotations, tn_opt.refine_budget,
                      have_ref ? &reference : nullptr, tn_opt.parallelism);

      write_text_file(tn_opt.out_dir + "/results.csv", scatter_table_csv(result.rows));
      write_manifest(tn_opt.out_dir + "/best.txt",
                     {{"alpha", format_double(result.best_alpha)},
                      {"beta", format_double(result.best_beta)},
                      {"gamma", format_double(result.best_gamma)},
                      {"mean_mi", format_double(result.best_mean_mi)}});
      write_manifest(tn_opt.out_dir + "/manifest.txt",
                     {{"command", "tune"},
                      {"dataset", tn_opt.dataset},
                      {"annotations", tn_opt.annotations},
                      {"reference", tn_opt.reference},
                      {"alphas", tn_opt.alphas},
                      {"betas", tn_opt.betas},
                      {"gammas", tn_opt.gammas},
                      {"cell_size", format_double(tn_opt.cell_size)},
                      {"vocab", std::to_string(spec.vocab_size)},
                      {"num_seeds", std::to_string(tn_opt.num_seeds)},
                      {"refine_budget", std::to_string(tn_opt.refine_budget)},
                      {"flat", tn_opt.flat ? "1" : "0"},
                      {"seed", std::to_string(tn_opt.seed)}});
      std::cout << "best alpha=" << format_double(result.best_alpha)
                << " beta=" << format_double(result.best_beta)
                << " gamma=" << format_double(result.best_gamma)
                << " mean_mi=" << format_double(result.best_mean_mi) << '\n';
    } else if (*en) {
      const LabelGrid grid = read_label_grid(en_opt.in);
      const EncodedMap enc = encode_map(scene_map_from_grid(grid));
      write_binary_file(en_opt.out, to_wire(enc));
      std::cout << "bytes=" << enc.image.size() + enc.meta.size() << '\n';
    } else if (*de) {
      const SceneMap map = decode_map(from_wire(read_binary_file(de_opt.in)));
      const LabelGrid grid = to_label_grid(map);
      write_label_grid(de_opt.out, grid);
      if (!de_opt.pgm.empty()) write_text_file(de_opt.pgm, to_pgm_preview(grid));
    } else if (*sc) {
      const LabelGrid z = read_label_grid(sc_opt.map);
      const LabelGrid a = read_label_grid(sc_opt.against);
      const MiScore s = mi_score(z, a);
      std::cout << "mi_nats=" << format_double(s.mi) << "\nnmi=" << format_double(s.normalized())
                << "\noverlap_pixels=" << s.overlap << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
