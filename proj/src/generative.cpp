#include "scenemap/generative.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace scenemap {

void GenerativeConfig::validate() const {
  params.validate();
  if (width < 1 || height < 1) throw std::invalid_argument("world dimensions must be positive");
  if (customers_per_cell < 1) throw std::invalid_argument("customers_per_cell must be >= 1");
  if (!position_noise.isApprox(position_noise.transpose(), 1e-12))
    throw std::invalid_argument("position noise covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(position_noise);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("position noise covariance must be positive semidefinite");
}

LabelGrid sample_world(const GenerativeConfig& cfg) {
  cfg.validate();
  const int32_t w = cfg.width, h = cfg.height;
  Rng rng(cfg.seed);

  std::vector<int32_t> order(static_cast<size_t>(w) * h);
  std::iota(order.begin(), order.end(), 0);
  if (cfg.shuffled_order) {
    for (size_t n = order.size(); n > 1; --n) {
      std::swap(order[n - 1], order[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(n)))]);
    }
  }

  std::vector<std::map<int32_t, int32_t>> hist(order.size());
  int32_t num_tables = 0;
  bool any_seated = false;

  auto seat = [&](int32_t col, int32_t row) {
    // neighborhood counts over the cell and its in-bounds Von Neumann neighbors
    std::vector<int64_t> n(static_cast<size_t>(num_tables), 0);
    auto add = [&](int32_t cc, int32_t rr) {
      if (cc < 0 || cc >= w || rr < 0 || rr >= h) return;
      for (const auto& [table, count] : hist[static_cast<size_t>(rr) * w + cc]) {
        n[table - 1] += count;
      }
    };
    add(col, row);
    add(col - 1, row);
    add(col + 1, row);
    add(col, row - 1);
    add(col, row + 1);

    int32_t table;
    if (!any_seated) {
      table = 0;  // first customer ever opens table 1 regardless of gamma
    } else {
      double total = cfg.params.gamma;
      for (int64_t nk : n) total += static_cast<double>(nk) + cfg.params.alpha;
      const double u = rng.uniform() * total;
      double acc = 0.0;
      table = num_tables;  // falls through to a new table
      for (int32_t k = 0; k < num_tables; ++k) {
        acc += static_cast<double>(n[k]) + cfg.params.alpha;
        if (u < acc) {
          table = k;
          break;
        }
      }
    }
    if (table == num_tables) ++num_tables;
    any_seated = true;
    ++hist[static_cast<size_t>(row) * w + col][table + 1];
  };

  for (int32_t idx : order) {
    const int32_t col = idx % w, row = idx / w;
    for (int32_t cust = 0; cust < cfg.customers_per_cell; ++cust) seat(col, row);
  }

  LabelGrid grid;
  grid.width = w;
  grid.height = h;
  grid.cell_size = cfg.params.cell_size[0];
  grid.labels.resize(hist.size());
  std::map<int32_t, int32_t> compact;  // modal table -> contiguous label, first raster appearance
  for (size_t cell = 0; cell < hist.size(); ++cell) {
    int32_t mode = 0;
    int32_t mode_count = 0;
    for (const auto& [table, count] : hist[cell]) {
      if (count > mode_count) {
        mode = table;
        mode_count = count;
      }
    }
    auto [it, inserted] = compact.try_emplace(mode, static_cast<int32_t>(compact.size()) + 1);
    grid.labels[cell] = it->second;
  }
  return grid;
}

ObservationSample sample_observations(const LabelGrid& world, const Hyperparameters& params,
                                      std::vector<std::vector<double>> phi, int32_t words_per_cell,
                                      const Eigen::Matrix3d& noise, uint64_t seed) {
  params.validate();
  if (words_per_cell < 1) throw std::invalid_argument("words_per_cell must be >= 1");
  if (world.width < 1 || world.height < 1 || world.labels.empty())
    throw std::invalid_argument("world grid is empty");

  const int32_t num_topics = *std::max_element(world.labels.begin(), world.labels.end());
  Rng rng(seed);

  if (phi.empty()) {
    phi.resize(static_cast<size_t>(num_topics));
    for (auto& p : phi) {
      p.resize(static_cast<size_t>(params.vocab_size));
      double sum = 0.0;
      for (double& v : p) {
        v = rng.gamma(params.beta);
        sum += v;
      }
      for (double& v : p) v /= sum;
    }
  } else if (phi.size() < static_cast<size_t>(num_topics)) {
    throw std::invalid_argument("phi table smaller than the world's topic count");
  }

  // matrix square root of the (PSD) covariance
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(noise);
  const Eigen::Matrix3d root =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();

  const double sx = params.cell_size[0], sy = params.cell_size[1], sz = params.cell_size[2];
  const double max_x = world.width * sx, max_y = world.height * sy;

  ObservationSample out;
  out.phi = std::move(phi);
  out.observations.reserve(world.labels.size() * static_cast<size_t>(words_per_cell));
  for (int32_t row = 0; row < world.height; ++row) {
    for (int32_t col = 0; col < world.width; ++col) {
      const int32_t topic = world.at(col, row);
      const std::vector<double>& p = out.phi[static_cast<size_t>(topic) - 1];
      const Eigen::Vector3d center((col + 0.5) * sx, (row + 0.5) * sy, 0.5 * sz);
      const double t = static_cast<double>(row) * world.width + col;
      for (int32_t n = 0; n < words_per_cell; ++n) {
        const double u = rng.uniform();
        double acc = 0.0;
        int32_t word = params.vocab_size - 1;
        for (int32_t v = 0; v < params.vocab_size; ++v) {
          acc += p[static_cast<size_t>(v)];
          if (u < acc) {
            word = v;
            break;
          }
        }
        const Eigen::Vector3d g(rng.gaussian(), rng.gaussian(), rng.gaussian());
        const Eigen::Vector3d pos = center + root * g;
        WordObservation obs;
        obs.t = t;
        obs.word = word;
        obs.pos = {std::clamp(pos.x(), 0.0, max_x - 1e-9 * sx),
                   std::clamp(pos.y(), 0.0, max_y - 1e-9 * sy),
                   std::clamp(pos.z(), 0.0, sz * (1.0 - 1e-9))};
        out.observations.push_back(obs);
      }
    }
  }
  return out;
}

}  // namespace scenemap
