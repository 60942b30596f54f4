#include <doctest.h>

#include <cmath>
#include <set>

#include "scenemap/mapping.hpp"

using namespace scenemap;

namespace {

Frame solid_frame(int32_t w, int32_t h, std::array<uint8_t, 3> rgb, float depth = 2.0f) {
  Frame f;
  f.width = w;
  f.height = h;
  f.pixels.assign(static_cast<size_t>(w) * h, rgb);
  f.depth.assign(static_cast<size_t>(w) * h, depth);
  return f;
}

Descriptor constant_descriptor(float hue_bin_weight, int bin) {
  Descriptor d{};
  d[static_cast<size_t>(bin)] = hue_bin_weight;
  return d;
}

}  // namespace

TEST_CASE("back projection examples and round trip") {
  CameraIntrinsics intr{100, 100, 50, 50};
  const Eigen::Vector3d p1 = back_project(50, 50, 2.0, intr);
  CHECK(p1.isApprox(Eigen::Vector3d(0, 0, 2), 1e-12));
  const Eigen::Vector3d p2 = back_project(150, 50, 1.0, intr);
  CHECK(p2.isApprox(Eigen::Vector3d(1, 0, 1), 1e-12));

  // projecting back recovers the pixel exactly
  const double u = 83.25, v = 17.5, depth = 3.75;
  const Eigen::Vector3d p = back_project(u, v, depth, intr);
  CHECK(p.x() / p.z() * intr.fx + intr.cx == doctest::Approx(u).epsilon(1e-12));
  CHECK(p.y() / p.z() * intr.fy + intr.cy == doctest::Approx(v).epsilon(1e-12));

  CameraIntrinsics bad{0, 1, 0, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("frame transforms: identity, translation, inverse composition") {
  FramePose identity;
  const Eigen::Vector3d p(1, 1, 2);
  CHECK(transform_frame(p, identity).isApprox(p, 1e-12));

  FramePose shift;
  shift.translation = {0, 0, -5};
  CHECK(transform_frame(p, shift).isApprox(Eigen::Vector3d(1, 1, -3), 1e-12));

  FramePose pose;
  const double a = 0.7;
  pose.rotation = Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  pose.translation = {2, -1, 4};
  pose.validate();
  CHECK(transform_frame(transform_frame(p, pose), pose.inverse()).isApprox(p, 1e-9));

  FramePose bad;
  bad.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("uniform frame quantizes to the nearest codebook entry everywhere") {
  // red pixels: hue 0 -> all descriptor mass in hue bin 0
  const Frame f = solid_frame(40, 32, {255, 0, 0});
  Codebook cb;
  cb.centroids.push_back(constant_descriptor(1.0f, 4));  // far
  cb.centroids.push_back(constant_descriptor(1.0f, 7));  // far
  cb.centroids.push_back(constant_descriptor(0.2f, 0));  // off-scale
  cb.centroids.push_back(constant_descriptor(1.0f, 0));  // exact match -> word 3
  const auto features = extract_features(f, cb);
  CHECK(!features.empty());
  for (const PixelWord& fw : features) CHECK(fw.word == 3);
}

TEST_CASE("frame smaller than a patch yields no features") {
  const Frame f = solid_frame(6, 6, {0, 255, 0});
  Codebook cb;
  cb.centroids.push_back(constant_descriptor(1.0f, 0));
  CHECK(extract_features(f, cb).empty());
}

TEST_CASE("nearest-centroid assignment matches a brute-force scan") {
  // oracle: plain exhaustive distance scan over random descriptors
  Rng rng(404);
  Codebook cb;
  for (int c = 0; c < 12; ++c) {
    Descriptor d{};
    for (auto& v : d) v = static_cast<float>(rng.uniform());
    cb.centroids.push_back(d);
  }
  // random frames exercise the full extract path against the oracle
  for (int trial = 0; trial < 5; ++trial) {
    Frame f;
    f.width = 64;
    f.height = 48;
    f.pixels.resize(static_cast<size_t>(f.width) * f.height);
    for (auto& px : f.pixels) {
      px = {static_cast<uint8_t>(rng.uniform_int(256)), static_cast<uint8_t>(rng.uniform_int(256)),
            static_cast<uint8_t>(rng.uniform_int(256))};
    }
    f.depth.assign(f.pixels.size(), 1.0f);
    for (const PixelWord& fw : extract_features(f, cb)) {
      const Descriptor d = describe_patch(f, fw.u, fw.v);
      int32_t best = 0;
      double best_dist = 1e300;
      for (size_t c = 0; c < cb.centroids.size(); ++c) {
        double dist = 0;
        for (int n = 0; n < kDescriptorDim; ++n) {
          const double diff = d[static_cast<size_t>(n)] - cb.centroids[c][static_cast<size_t>(n)];
          dist += diff * diff;
        }
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int32_t>(c);
        }
      }
      CHECK(fw.word == best);
    }
  }
}

TEST_CASE("process_frame conserves valid features and bins them correctly") {
  Hyperparameters p;
  p.vocab_size = 4;
  p.cell_size = {0.5, 0.5, 0.5};
  CameraIntrinsics intr{80, 80, 20, 16};
  FramePose pose;
  pose.translation = {3.0, -2.0, 1.0};
  Codebook cb;
  for (int c = 0; c < 4; ++c) cb.centroids.push_back(constant_descriptor(1.0f, c));

  SUBCASE("all-invalid depth inserts nothing") {
    SceneModel m(p);
    Rng rng(1);
    Frame f = solid_frame(40, 32, {0, 0, 255}, -1.0f);
    const FrameResult r = process_frame(m, f, pose, intr, cb, rng);
    CHECK(r.inserted == 0);
    CHECK(r.skipped_invalid_depth > 0);
    CHECK(m.total_observations == 0);
  }

  SUBCASE("valid features all insert, into the recomputed cells") {
    SceneModel m(p);
    Rng rng(1);
    Frame f = solid_frame(40, 32, {0, 0, 255}, 2.5f);
    const auto features = extract_features(f, cb);
    const FrameResult r = process_frame(m, f, pose, intr, cb, rng);
    CHECK(r.inserted == static_cast<int32_t>(features.size()));
    CHECK(m.total_observations == features.size());
    // recompute the pipeline independently per feature
    for (const PixelWord& fw : features) {
      const Eigen::Vector3d world = transform_frame(back_project(fw.u, fw.v, 2.5, intr), pose);
      const CellCoord c = cell_of({world.x(), world.y(), world.z()}, p);
      CHECK(m.find_cell(c) != nullptr);
    }
  }
}

TEST_CASE("snapshot: empty model gives the empty map") {
  Hyperparameters p;
  p.vocab_size = 2;
  SceneModel m(p);
  const SceneMap map = snapshot_scene_map(m);
  CHECK(map.width == 0);
  CHECK(map.height == 0);
  CHECK(map.labels.empty());
  CHECK(map.palette.empty());
}

TEST_CASE("snapshot: singleton cell compacts to palette entry 1") {
  Hyperparameters p;
  p.vocab_size = 2;
  SceneModel m(p);
  m.force_insert({0, 0, {3.5, 4.5, 1.5}}, 7);
  const SceneMap map = snapshot_scene_map(m);
  CHECK(map.width == 1);
  CHECK(map.height == 1);
  CHECK(map.origin_i == 3);
  CHECK(map.origin_j == 4);
  CHECK(map.labels == std::vector<int32_t>{1});
  CHECK(map.palette == std::vector<int32_t>{7});
}

TEST_CASE("snapshot: column collision goes to the cell with more observations") {
  Hyperparameters p;
  p.vocab_size = 2;
  SceneModel m(p);
  for (int n = 0; n < 10; ++n) m.force_insert({0, 0, {3.5, 4.5, 1.5}}, 2);
  for (int n = 0; n < 4; ++n) m.force_insert({0, 0, {3.5, 4.5, 2.5}}, 9);
  const SceneMap map = snapshot_scene_map(m);
  REQUIRE(map.labels.size() == 1);
  CHECK(map.palette[static_cast<size_t>(map.labels[0]) - 1] == 2);

  // equal counts: the shallowest z wins
  SceneModel m2(p);
  for (int n = 0; n < 4; ++n) m2.force_insert({0, 0, {3.5, 4.5, 1.5}}, 2);
  for (int n = 0; n < 4; ++n) m2.force_insert({0, 0, {3.5, 4.5, 0.5}}, 9);
  const SceneMap map2 = snapshot_scene_map(m2);
  CHECK(map2.palette[static_cast<size_t>(map2.labels[0]) - 1] == 9);
}

TEST_CASE("snapshot determinism and palette completeness") {
  Hyperparameters p;
  p.vocab_size = 4;
  SceneModel m(p);
  Rng rng(21);
  for (int n = 0; n < 300; ++n) {
    m.force_insert({0, static_cast<int32_t>(rng.uniform_int(4)),
                    {rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, 3)}},
                   1 + static_cast<int32_t>(rng.uniform_int(5)));
  }
  const SceneMap a = snapshot_scene_map(m);
  const SceneMap b = snapshot_scene_map(m);
  CHECK(a == b);

  // palette covers exactly the labels present, injectively
  std::set<int32_t> present;
  for (int32_t l : a.labels) {
    if (l > 0) present.insert(l);
  }
  CHECK(present.size() == a.palette.size());
  std::set<int32_t> originals(a.palette.begin(), a.palette.end());
  CHECK(originals.size() == a.palette.size());
}
