#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "benthic/geometry.hpp"
#include "benthic/tracking.hpp"
#include "json.hpp"

namespace benthic {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kLiveOyster = "live_oyster";

struct DetectionFrame {
  long index = 0;
  std::vector<Detection> detections;
};

// Per-frame detector output. bbox is [x, y, w, h], top-left origin, pixels.
struct DetectionFile {
  std::string video;
  std::optional<double> fps;
  std::vector<DetectionFrame> frames;  // strictly increasing index

  const DetectionFrame* find(long index) const;
};

struct GroundTruthObject {
  BBox bbox;
  std::string label{kLiveOyster};
  std::optional<PolygonMask> polygon;
};

struct GroundTruthFrame {
  long index = 0;
  std::vector<GroundTruthObject> objects;
};

struct GroundTruthFile {
  std::string video;
  std::optional<double> fps;
  std::vector<GroundTruthFrame> frames;

  const GroundTruthFrame* find(long index) const;
};

// Both parsers throw InputError; messages name the frame index and, when
// relevant, the detection ordinal ("frame 3 detection 0: score out of range").
DetectionFile parse_detections(std::string_view bytes);
GroundTruthFile parse_ground_truth(std::string_view bytes);

// Full-precision canonical JSON, newline-terminated.
std::string serialize_detections(const DetectionFile& file);
std::string serialize_ground_truth(const GroundTruthFile& file);

// Keys in order: total_count, tracks[{id, birth_frame, last_frame, hits}],
// per_frame_active. Compact, newline-terminated.
std::string write_report(const CountReport& report);
// Same, prefixed with schema_version and followed by the effective config.
std::string write_report(const CountReport& report, const nlohmann::ordered_json& config);

// Rounds to 6 significant digits, the precision of every float in reports.
double round_sig6(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Ordered image files with verified identical dimensions. Frames decode to
// 8-bit grayscale.
class FrameSource {
 public:
  FrameSource(std::vector<std::filesystem::path> paths, int width, int height)
      : paths_(std::move(paths)), width_(width), height_(height) {}

  std::size_t size() const { return paths_.size(); }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::filesystem::path>& paths() const { return paths_; }
  cv::Mat read(std::size_t i) const;

 private:
  std::vector<std::filesystem::path> paths_;
  int width_, height_;
};

// A directory is scanned for image files; a list is used as given. Either way
// the result is sorted lexicographically by filename and every frame is
// decoded once to check its dimensions. Throws InputError.
FrameSource load_frames(const std::filesystem::path& dir);
FrameSource load_frames(std::vector<std::filesystem::path> files);

}  // namespace benthic
