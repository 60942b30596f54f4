#include "scenemap/evaluation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "scenemap/codec.hpp"
#include "scenemap/inference.hpp"
#include "scenemap/mapping.hpp"
#include "scenemap/rng.hpp"

namespace scenemap {

double MiScore::normalized() const {
  const double h = std::max(h_left, h_right);
  return h > 0.0 ? mi / h : 0.0;
}

MiScore mi_score(const LabelGrid& z, const LabelGrid& a) {
  if (std::abs(z.cell_size - a.cell_size) > 1e-12) {
    throw std::runtime_error("grids use different cell sizes and cannot be aligned");
  }
  const int64_t lo_i = std::max(z.origin_i, a.origin_i);
  const int64_t hi_i = std::min(z.origin_i + z.width, a.origin_i + a.width);
  const int64_t lo_j = std::max(z.origin_j, a.origin_j);
  const int64_t hi_j = std::min(z.origin_j + z.height, a.origin_j + a.height);

  std::map<std::pair<int32_t, int32_t>, int64_t> joint;
  std::map<int32_t, int64_t> mz, ma;
  int64_t n = 0;
  for (int64_t J = lo_j; J < hi_j; ++J) {
    for (int64_t I = lo_i; I < hi_i; ++I) {
      const int32_t lz = z.at(static_cast<int32_t>(I - z.origin_i), static_cast<int32_t>(J - z.origin_j));
      const int32_t la = a.at(static_cast<int32_t>(I - a.origin_i), static_cast<int32_t>(J - a.origin_j));
      if (lz == 0 || la == 0) continue;  // score only where both are labeled
      ++joint[{lz, la}];
      ++mz[lz];
      ++ma[la];
      ++n;
    }
  }
  if (n == 0) {
    std::ostringstream msg;
    msg << "no overlapping labeled pixels between grids (" << z.width << "x" << z.height
        << " at " << z.origin_i << "," << z.origin_j << " vs " << a.width << "x" << a.height
        << " at " << a.origin_i << "," << a.origin_j << ")";
    throw std::runtime_error(msg.str());
  }

  MiScore s;
  s.overlap = static_cast<size_t>(n);
  const double dn = static_cast<double>(n);
  // summation order is fixed by the count values, not the label identities,
  // so relabeling either grid reproduces the score bit-for-bit
  std::vector<std::array<int64_t, 3>> terms;
  terms.reserve(joint.size());
  for (const auto& [pair, c] : joint) terms.push_back({c, mz[pair.first], ma[pair.second]});
  std::sort(terms.begin(), terms.end());
  for (const auto& [c, cz, ca] : terms) {
    const double p = c / dn;
    s.mi += p * std::log(p / ((cz / dn) * (ca / dn)));  // 0 log 0 terms never appear here
  }
  auto entropy = [dn](const std::map<int32_t, int64_t>& marginal) {
    std::vector<int64_t> counts;
    counts.reserve(marginal.size());
    for (const auto& [l, c] : marginal) counts.push_back(c);
    std::sort(counts.begin(), counts.end());
    double h = 0;
    for (int64_t c : counts) {
      const double p = c / dn;
      h -= p * std::log(p);
    }
    return h;
  };
  s.h_left = entropy(mz);
  s.h_right = entropy(ma);
  s.mi = std::max(s.mi, 0.0);  // clip float round-off below zero
  return s;
}

double mutual_information(const LabelGrid& z, const LabelGrid& a) { return mi_score(z, a).mi; }

double mutual_information(const SceneMap& z, const LabelGrid& a) {
  return mi_score(to_label_grid(z), a).mi;
}

LabelGrid to_label_grid(const SceneMap& map) {
  LabelGrid g;
  g.origin_i = map.origin_i;
  g.origin_j = map.origin_j;
  g.width = map.width;
  g.height = map.height;
  g.cell_size = map.cell_size_x;
  g.labels.resize(map.labels.size());
  for (size_t n = 0; n < map.labels.size(); ++n) {
    const int32_t v = map.labels[n];
    g.labels[n] = v == 0 ? 0 : map.palette[static_cast<size_t>(v) - 1];
  }
  return g;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<size_t> idx(n);
  for (size_t k = 0; k < n; ++k) idx[k] = k;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t k = 0;
  while (k < n) {
    size_t j = k;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[k]]) ++j;
    const double r = (static_cast<double>(k) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t m = k; m <= j; ++m) ranks[idx[m]] = r;
    k = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal-length series");
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  double mx = 0, my = 0;
  for (size_t n = 0; n < rx.size(); ++n) {
    mx += rx[n];
    my += ry[n];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double num = 0, dx = 0, dy = 0;
  for (size_t n = 0; n < rx.size(); ++n) {
    num += (rx[n] - mx) * (ry[n] - my);
    dx += (rx[n] - mx) * (rx[n] - mx);
    dy += (ry[n] - my) * (ry[n] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

void GridSearchSpec::validate() const {
  if (alphas.empty() || betas.empty() || gammas.empty()) throw std::invalid_argument("grid lists must be non-empty");
  if (seeds.empty()) throw std::invalid_argument("at least one seed required");
  for (double a : alphas) {
    if (!(a > 0)) throw std::invalid_argument("alpha values must be positive");
  }
  for (double b : betas) {
    if (!(b > 0)) throw std::invalid_argument("beta values must be positive");
  }
  for (double g : gammas) {
    if (!(g > 0)) throw std::invalid_argument("gamma values must be positive");
  }
}

GridSearchResult grid_search(const GridSearchSpec& spec, const std::vector<WordObservation>& dataset,
                             const LabelGrid& annotations, int64_t refine_budget,
                             const LabelGrid* reference, int parallelism) {
  spec.validate();

  GridSearchResult result;
  for (double a : spec.alphas) {
    for (double b : spec.betas) {
      for (double g : spec.gammas) {
        for (uint64_t seed : spec.seeds) {
          GridSearchRow row;
          row.alpha = a;
          row.beta = b;
          row.gamma = g;
          row.seed = seed;
          result.rows.push_back(row);
        }
      }
    }
  }

  auto run = [&](GridSearchRow& row) {
    try {
      Hyperparameters params;
      params.alpha = row.alpha;
      params.beta = row.beta;
      params.gamma = row.gamma;
      params.cell_size = spec.cell_size;
      params.vocab_size = spec.vocab_size;
      params.neighborhood = spec.neighborhood;
      SceneModel model(params);
      Rng ingest(row.seed, 0);
      for (const WordObservation& obs : dataset) insert_observation(model, obs, ingest);
      Rng refine_rng(row.seed, 1);
      refine(model, refine_budget, refine_rng);
      const SceneMap snap = snapshot_scene_map(model);
      const LabelGrid learned = to_label_grid(snap);
      row.mi_annotations = mutual_information(learned, annotations);
      row.mi_reference = reference ? mutual_information(learned, *reference) : row.mi_annotations;
      row.encoded_bytes = encoded_size(snap);
      row.distinct_labels = snap.distinct_labels();
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  int workers = parallelism > 0 ? parallelism : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, static_cast<int>(result.rows.size()));
  if (workers <= 1) {
    for (GridSearchRow& row : result.rows) run(row);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&]() {
        for (size_t n = next.fetch_add(1); n < result.rows.size(); n = next.fetch_add(1)) {
          run(result.rows[n]);
        }
      });
    }
    for (auto& t : threads) t.join();
  }

  const GridPoint best = argmax_from_rows(result.rows);
  result.best_alpha = best.alpha;
  result.best_beta = best.beta;
  result.best_gamma = best.gamma;
  double sum = 0;
  int64_t cnt = 0;
  for (const GridSearchRow& row : result.rows) {
    if (!row.failed && row.alpha == best.alpha && row.beta == best.beta && row.gamma == best.gamma) {
      sum += row.mi_annotations;
      ++cnt;
    }
  }
  result.best_mean_mi = sum / static_cast<double>(cnt);
  return result;
}

GridPoint argmax_from_rows(const std::vector<GridSearchRow>& rows) {
  std::map<std::tuple<double, double, double>, std::pair<double, int64_t>> agg;
  for (const GridSearchRow& row : rows) {
    if (row.failed) continue;
    auto& [sum, cnt] = agg[{row.alpha, row.beta, row.gamma}];
    sum += row.mi_annotations;
    ++cnt;
  }
  if (agg.empty()) throw std::runtime_error("every grid-search run failed");
  bool have = false;
  GridPoint best;
  double best_mean = 0;
  for (const auto& [key, sc] : agg) {  // map order = ascending lexicographic, so ties keep the smallest
    const double mean = sc.first / static_cast<double>(sc.second);
    if (!have || mean > best_mean) {
      have = true;
      best_mean = mean;
      best = {std::get<0>(key), std::get<1>(key), std::get<2>(key)};
    }
  }
  return best;
}

std::string scatter_table_csv(const std::vector<GridSearchRow>& rows) {
  std::ostringstream out;
  out << "alpha,beta,gamma,seed,mi_annotations,mi_reference,encoded_bytes,distinct_labels\n";
  char buf[256];
  for (const GridSearchRow& row : rows) {
    if (row.failed) continue;
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%llu,%.10g,%.10g,%zu,%d\n", row.alpha,
                  row.beta, row.gamma, static_cast<unsigned long long>(row.seed),
                  row.mi_annotations, row.mi_reference, row.encoded_bytes, row.distinct_labels);
    out << buf;
  }
  return out.str();
}

}  // namespace scenemap
