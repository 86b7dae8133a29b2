#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "benthic/geometry.hpp"
#include "benthic/ingest.hpp"

namespace benthic::synth {

// Portable random stream: std::mt19937_64 (its output sequence is fixed by
// the C++ standard) with hand-rolled conversions, because the standard
// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // 53-bit uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Box-Muller, one value per call.
  double gaussian();
  // Knuth's multiplication method; fine for the small means used here.
  int poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to derive independent sub-stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct NoiseSpec {
  double detection_dropout_prob = 0.0;
  double bbox_jitter_sigma = 0.0;      // pixels
  double false_positive_rate = 0.0;    // expected false positives per frame
  double pixel_noise_sigma = 0.0;      // intensity units (0..255)
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int n_objects = 0;
  double object_size_min = 24.0;
  double object_size_max = 40.0;
  int world_w = 1280;
  int world_h = 480;
  int camera_w = 640;
  int camera_h = 480;
  double camera_dx = 2.0;  // pixels per frame
  double camera_dy = 0.0;
  int n_frames = 1;
  NoiseSpec noise;
  // Non-overlap placement with at least `min_gap` pixels between boxes.
  bool separation = true;
  double min_gap = 0.0;
  // Camera top-left at frame 0. Defaults to the world corner the velocity
  // moves away from.
  std::optional<Point2> camera_start;
  // Objects are placed inside this world rectangle (default: whole world).
  std::optional<BBox> placement_region;

  // Throws InputError when the camera path leaves the world or a field is
  // out of range.
  void validate() const;
  Point2 camera_position(int frame) const;
};

SceneSpec scene_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json scene_spec_to_json(const SceneSpec& spec);

struct SceneObject {
  BBox world_box;
  PolygonMask world_outline;
  double mean_intensity;
};

// A generated scene. Frames are rendered on demand from the world image and
// are a pure function of (spec, frame index).
class Scene {
 public:
  Scene(SceneSpec spec, std::vector<SceneObject> objects, cv::Mat world);

  const SceneSpec& spec() const { return spec_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const cv::Mat& world() const { return world_; }
  int num_frames() const { return spec_.n_frames; }

  // 8-bit grayscale camera view for frame t, with pixel noise applied.
  cv::Mat frame(int t) const;

  GroundTruthFile truth;
  DetectionFile detections;
  int true_count = 0;

 private:
  SceneSpec spec_;
  std::vector<SceneObject> objects_;
  cv::Mat world_;
};

// Throws InputError when the spec is invalid or the objects cannot be
// packed (10^4 rejected placements for one object).
Scene generate(const SceneSpec& spec);

// Corrupts ground truth into detections: independent dropout, Gaussian
// jitter on x, y, w, h, and Poisson-many uniform false positives per frame.
// Surviving true detections keep score 1.0; boxes are clipped to the frame.
DetectionFile corrupt(const GroundTruthFile& truth, const NoiseSpec& noise, std::uint64_t seed,
                      int frame_w, int frame_h, double size_min, double size_max);

// Clips a polygon to the axis-aligned rectangle [0, w] x [0, h].
std::vector<Point2> clip_polygon(const std::vector<Point2>& poly, double w, double h);

}  // namespace benthic::synth
