#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "scenemap/core.hpp"
#include "scenemap/inference.hpp"
#include "scenemap/rng.hpp"

namespace scenemap {

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  void validate() const;  // fx, fy > 0
};

struct FramePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // camera-to-world
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  void validate() const;  // orthonormal, det +1
  FramePose inverse() const;
};

struct Frame {
  double t = 0.0;
  int32_t width = 0, height = 0;
  std::vector<std::array<uint8_t, 3>> pixels;  // row-major RGB
  std::vector<float> depth;                    // meters; <= 0 or NaN = invalid
};

// 8-bin coarse hue histogram + 8-bin intensity-gradient-orientation histogram
inline constexpr int kDescriptorDim = 16;
inline constexpr int kPatchSize = 8;
using Descriptor = std::array<float, kDescriptorDim>;

struct Codebook {
  std::vector<Descriptor> centroids;  // V entries
};

struct PixelWord {
  int32_t u = 0, v = 0;  // pixel coordinates of the patch center
  int32_t word = 0;
};

Descriptor describe_patch(const Frame& f, int32_t u, int32_t v);

// Dense-grid patch sampling at the given stride; each descriptor is assigned
// the nearest codebook centroid under Euclidean distance.
std::vector<PixelWord> extract_features(const Frame& f, const Codebook& codebook, int32_t stride = 8);

// ((u - cx) * depth / fx, (v - cy) * depth / fy, depth), camera frame
Eigen::Vector3d back_project(double u, double v, double depth, const CameraIntrinsics& intr);

Eigen::Vector3d transform_frame(const Eigen::Vector3d& p, const FramePose& pose);

struct FrameResult {
  int32_t inserted = 0;
  int32_t skipped_invalid_depth = 0;
};

// Extract, back-project, transform, and seat every feature with valid depth.
FrameResult process_frame(SceneModel& m, const Frame& f, const FramePose& pose,
                          const CameraIntrinsics& intr, const Codebook& codebook, Rng& rng,
                          int32_t stride = 8);

// Flattens the model to the 2D MAP label map: per (i, j) the z-cell with the
// most observations wins (ties to the shallowest), labels are compacted by
// first raster appearance, and the bounding box is tight.
SceneMap snapshot_scene_map(const SceneModel& m);

// file-level inputs (External Interfaces)
Codebook load_codebook(const std::string& path);          // V rows of decimal descriptors
Frame load_ppm_frame(const std::string& image_path, const std::string& depth_path, double t);

struct PoseManifestEntry {
  double t = 0.0;
  std::string image_path, depth_path;
  FramePose pose;
};
std::vector<PoseManifestEntry> load_pose_manifest(const std::string& path);

}  // namespace scenemap
