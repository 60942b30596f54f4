#include "scenemap/mapping.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace scenemap {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("focal lengths must be positive");
}

void FramePose::validate() const {
  if (!(rotation.transpose() * rotation).isApprox(Eigen::Matrix3d::Identity(), 1e-9))
    throw std::invalid_argument("pose rotation is not orthonormal");
  if (rotation.determinant() < 0.0) throw std::invalid_argument("pose rotation is not proper");
}

FramePose FramePose::inverse() const {
  FramePose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(rotation.transpose() * translation);
  return inv;
}

namespace {

double pixel_hue(const std::array<uint8_t, 3>& rgb) {
  const double r = rgb[0] / 255.0, g = rgb[1] / 255.0, b = rgb[2] / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double c = mx - mn;
  if (c <= 0.0) return 0.0;
  double h;
  if (mx == r) {
    h = std::fmod((g - b) / c, 6.0);
  } else if (mx == g) {
    h = (b - r) / c + 2.0;
  } else {
    h = (r - g) / c + 4.0;
  }
  h *= 60.0;
  return h < 0.0 ? h + 360.0 : h;
}

double intensity(const Frame& f, int32_t u, int32_t v) {
  const auto& p = f.pixels[static_cast<size_t>(v) * f.width + u];
  return (p[0] + p[1] + p[2]) / 3.0;
}

void l1_normalize(float* begin, float* end) {
  double sum = 0.0;
  for (float* it = begin; it != end; ++it) sum += *it;
  if (sum > 0.0) {
    for (float* it = begin; it != end; ++it) *it = static_cast<float>(*it / sum);
  }
}

}  // namespace

Descriptor describe_patch(const Frame& f, int32_t u, int32_t v) {
  constexpr int half = kPatchSize / 2;
  Descriptor d{};
  // hue histogram over the whole patch
  for (int32_t dy = -half; dy < half; ++dy) {
    for (int32_t dx = -half; dx < half; ++dx) {
      const double hue = pixel_hue(f.pixels[static_cast<size_t>(v + dy) * f.width + (u + dx)]);
      const int bin = std::min(7, static_cast<int>(hue / 45.0));
      d[static_cast<size_t>(bin)] += 1.0f;
    }
  }
  // gradient orientation histogram over the patch interior, magnitude weighted
  for (int32_t dy = -half + 1; dy < half - 1; ++dy) {
    for (int32_t dx = -half + 1; dx < half - 1; ++dx) {
      const double gx = intensity(f, u + dx + 1, v + dy) - intensity(f, u + dx - 1, v + dy);
      const double gy = intensity(f, u + dx, v + dy + 1) - intensity(f, u + dx, v + dy - 1);
      const double mag = std::hypot(gx, gy);
      if (mag <= 0.0) continue;
      const double angle = std::atan2(gy, gx);  // [-pi, pi]
      int bin = static_cast<int>((angle + M_PI) / (2.0 * M_PI) * 8.0);
      bin = std::clamp(bin, 0, 7);
      d[static_cast<size_t>(8 + bin)] += static_cast<float>(mag);
    }
  }
  l1_normalize(d.data(), d.data() + 8);
  l1_normalize(d.data() + 8, d.data() + 16);
  return d;
}

std::vector<PixelWord> extract_features(const Frame& f, const Codebook& codebook, int32_t stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (codebook.centroids.empty()) throw std::invalid_argument("codebook is empty");
  std::vector<PixelWord> out;
  constexpr int half = kPatchSize / 2;
  for (int32_t v = half; v + half <= f.height; v += stride) {
    for (int32_t u = half; u + half <= f.width; u += stride) {
      const Descriptor d = describe_patch(f, u, v);
      int32_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < codebook.centroids.size(); ++c) {
        double dist = 0.0;
        for (int n = 0; n < kDescriptorDim; ++n) {
          const double diff = d[static_cast<size_t>(n)] - codebook.centroids[c][static_cast<size_t>(n)];
          dist += diff * diff;
        }
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int32_t>(c);
        }
      }
      out.push_back({u, v, best});
    }
  }
  return out;
}

Eigen::Vector3d back_project(double u, double v, double depth, const CameraIntrinsics& intr) {
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

Eigen::Vector3d transform_frame(const Eigen::Vector3d& p, const FramePose& pose) {
  return pose.rotation * p + pose.translation;
}

FrameResult process_frame(SceneModel& m, const Frame& f, const FramePose& pose,
                          const CameraIntrinsics& intr, const Codebook& codebook, Rng& rng,
                          int32_t stride) {
  intr.validate();
  pose.validate();
  FrameResult result;
  for (const PixelWord& fw : extract_features(f, codebook, stride)) {
    const float depth = f.depth[static_cast<size_t>(fw.v) * f.width + fw.u];
    if (!(depth > 0.0f) || std::isnan(depth)) {
      ++result.skipped_invalid_depth;
      continue;
    }
    const Eigen::Vector3d world =
        transform_frame(back_project(fw.u, fw.v, depth, intr), pose);
    WordObservation obs;
    obs.t = f.t;
    obs.word = fw.word;
    obs.pos = {world.x(), world.y(), world.z()};
    insert_observation(m, obs, rng);
    ++result.inserted;
  }
  return result;
}

SceneMap snapshot_scene_map(const SceneModel& m) {
  struct Column {
    int64_t k = 0;
    size_t count = 0;
  };
  // keyed (j, i) so iteration is raster order
  std::map<std::pair<int64_t, int64_t>, Column> columns;
  for (const CellCoord& c : m.cell_order) {
    const Cell* cell = m.find_cell(c);
    if (!cell || cell->size() == 0) continue;
    auto [it, inserted] = columns.try_emplace({c.j, c.i});
    Column& col = it->second;
    if (inserted || cell->size() > col.count ||
        (cell->size() == col.count && c.k < col.k)) {
      col.k = c.k;
      col.count = cell->size();
    }
  }

  SceneMap map;
  map.cell_size_x = m.params.cell_size[0];
  map.cell_size_y = m.params.cell_size[1];
  if (columns.empty()) return map;

  int64_t min_i = std::numeric_limits<int64_t>::max(), max_i = std::numeric_limits<int64_t>::min();
  int64_t min_j = std::numeric_limits<int64_t>::max(), max_j = std::numeric_limits<int64_t>::min();
  for (const auto& [key, col] : columns) {
    min_j = std::min(min_j, key.first);
    max_j = std::max(max_j, key.first);
    min_i = std::min(min_i, key.second);
    max_i = std::max(max_i, key.second);
  }
  map.origin_i = min_i;
  map.origin_j = min_j;
  map.width = static_cast<int32_t>(max_i - min_i + 1);
  map.height = static_cast<int32_t>(max_j - min_j + 1);
  map.labels.assign(static_cast<size_t>(map.width) * map.height, 0);

  std::map<int32_t, int32_t> compact;  // model topic -> palette id, first raster appearance
  for (const auto& [key, col] : columns) {
    const int32_t topic = map_topic_of_cell(m, {key.second, key.first, col.k});
    if (topic == 0) continue;
    auto [it, inserted] = compact.try_emplace(topic, 0);
    if (inserted) {
      it->second = static_cast<int32_t>(map.palette.size()) + 1;
      map.palette.push_back(topic);
    }
    const size_t row = static_cast<size_t>(key.first - min_j);
    const size_t colx = static_cast<size_t>(key.second - min_i);
    map.labels[row * map.width + colx] = it->second;
  }
  return map;
}

Codebook load_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open codebook file: " + path);
  Codebook cb;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    Descriptor d{};
    for (int n = 0; n < kDescriptorDim; ++n) {
      if (!(row >> d[static_cast<size_t>(n)]))
        throw std::runtime_error("codebook row with fewer than 16 values: " + path);
    }
    cb.centroids.push_back(d);
  }
  if (cb.centroids.empty()) throw std::runtime_error("codebook file has no entries: " + path);
  return cb;
}

Frame load_ppm_frame(const std::string& image_path, const std::string& depth_path, double t) {
  std::ifstream img(image_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open image: " + image_path);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  img >> magic >> width >> height >> maxval;
  if (magic != "P6" || maxval != 255 || width < 1 || height < 1)
    throw std::runtime_error("expected binary 8-bit P6 ppm: " + image_path);
  img.get();  // single whitespace after header
  Frame f;
  f.t = t;
  f.width = width;
  f.height = height;
  f.pixels.resize(static_cast<size_t>(width) * height);
  img.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size() * 3));
  if (!img) throw std::runtime_error("truncated ppm payload: " + image_path);

  std::ifstream dep(depth_path);
  if (!dep) throw std::runtime_error("cannot open depth file: " + depth_path);
  int dw = 0, dh = 0;
  dep >> dw >> dh;
  if (dw != width || dh != height)
    throw std::runtime_error("depth dimensions do not match image: " + depth_path);
  f.depth.resize(f.pixels.size());
  for (float& d : f.depth) {
    if (!(dep >> d)) throw std::runtime_error("truncated depth payload: " + depth_path);
  }
  return f;
}

std::vector<PoseManifestEntry> load_pose_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose manifest: " + path);
  std::vector<PoseManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    PoseManifestEntry e;
    row >> e.t >> e.image_path >> e.depth_path;
    for (int r = 0; r < 3; ++r) row >> e.pose.translation[r];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) row >> e.pose.rotation(r, c);
    }
    if (!row) throw std::runtime_error("malformed pose manifest line: " + line);
    e.pose.validate();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace scenemap
