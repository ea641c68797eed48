#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "resmatch/tensor.hpp"

namespace resmatch {

// Keypoints of one image: pixel positions plus unit-norm descriptors.
// Stored as f32 to match the on-disk layout bit for bit.
struct FeatureSet {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::size_t count = 0;       // N
  std::size_t channels = 0;    // c
  std::vector<float> positions;    // N×2 row-major
  std::vector<float> descriptors;  // N×c row-major
};

struct GroundTruth {
  std::array<double, 9> homography{};  // maps image-A pixels to image-B pixels, row-major
  std::vector<std::pair<std::uint32_t, std::uint32_t>> inlier_pairs;
  std::vector<std::uint32_t> unmatched_a;
  std::vector<std::uint32_t> unmatched_b;
};

struct SynthConfig {
  std::uint32_t n_points = 48;
  std::uint32_t channels = 32;
  std::uint32_t width = 640;
  std::uint32_t height = 480;
  double descriptor_noise_sigma = 0.1;
  double outlier_fraction = 0.0;
  double max_rotation = 0.35;      // radians
  double max_scale = 0.15;         // fractional zoom range
  double max_translation = 32.0;   // pixels
  double max_perspective = 2e-6;   // bottom-row magnitude
  double position_jitter = 0.0;    // gaussian sigma in pixels, applied to image-B inliers
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SynthPair {
  FeatureSet a;
  FeatureSet b;
  GroundTruth gt;
};

// Reprojection threshold (pixels) for labeling a jittered correspondence as
// a positive, and the tolerance used by the generator self-checks.
inline constexpr double kGtLabelEps = 3.0;

void validate(const FeatureSet& fs);

// Coordinates centered at the image center and divided by max(w, h)/2, so the
// longer axis spans [-1, 1].
Tensor2 normalize_positions(const FeatureSet& fs);

// Descriptors widened to doubles for the numeric pipeline.
Tensor2 descriptor_matrix(const FeatureSet& fs);

std::array<double, 2> apply_homography(const std::array<double, 9>& h, double x, double y);

// Random homography-warped pair with shared perturbed descriptors, fresh
// outliers and the exact correspondence partition. Pure function of cfg.
SynthPair generate_pair(const SynthConfig& cfg);

// Binary formats, little-endian:
//   features:     "RMF1" | u32 width | u32 height | u32 N | u32 c
//                 | N×2 f32 positions | N×c f32 descriptors
//   ground truth: "RMG1" | 9 f64 homography | u32 n_inliers | n_inliers × (u32 i, u32 j)
void write_features(const FeatureSet& fs, const std::string& path);
FeatureSet read_features(const std::string& path);
void write_ground_truth(const GroundTruth& gt, const std::string& path);
// n_a/n_b are the feature counts of the two sides; the unmatched lists are
// reconstructed as the complement of the stored inlier pairs.
GroundTruth read_ground_truth(const std::string& path, std::size_t n_a, std::size_t n_b);

}  // namespace resmatch
