#pragma once

#include <optional>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "benthic/geometry.hpp"
#include "benthic/kcf.hpp"

namespace benthic {

struct Detection {
  BBox bbox;
  double score = 1.0;
  std::optional<PolygonMask> mask;
};

enum class TrackState { kActive, kRemoved };

struct Track {
  int id = 0;
  BBox bbox;
  KcfModel model;
  int hits = 0;
  int misses = 0;
  long birth_frame = 0;
  long last_frame = 0;  // last frame the track was matched (or born)
  TrackState state = TrackState::kActive;
};

struct TrackerConfig {
  double iou_threshold = 0.2;
  int max_misses = 10;
  double score_threshold = 0.5;
  int min_hits_to_count = 1;
  KcfParams kcf = KcfParams::defaults(FeatureMode::kHog);

  void validate() const;
};

struct TrackBox {
  int track_id;
  BBox box;
};

struct Match {
  int track_id;
  std::size_t detection_index;
  double iou;
};

struct AssociationResult {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_detections;  // ascending
  std::vector<int> unmatched_tracks;              // ascending
};

// Greedy max-IoU matching. Candidate pairs need iou > threshold; they are
// taken in order of descending IoU, then ascending track id, then ascending
// detection index, skipping pairs whose track or detection is already used.
AssociationResult associate(std::span<const Detection> detections,
                            std::span<const TrackBox> tracks, double threshold);

struct TrackSummary {
  int id;
  long birth_frame;
  long last_frame;
  int hits;
  friend bool operator==(const TrackSummary&, const TrackSummary&) = default;
};

struct CountReport {
  int total_count = 0;
  std::vector<TrackSummary> tracks;  // every track ever created, by id
  std::vector<int> per_frame_active;
  friend bool operator==(const CountReport&, const CountReport&) = default;
};

// Tracking-by-detection state for one video. Not safe for concurrent step()
// calls; per-track KCF updates inside a step run on `threads` workers
// (0 = hardware concurrency) and give the same result for any thread count.
class MultiTracker {
 public:
  explicit MultiTracker(TrackerConfig config, unsigned threads = 1);

  // Frame indices must increase by exactly one between calls. Indices in
  // the returned result refer to positions in `detections`.
  AssociationResult step(long frame_index, const cv::Mat& frame,
                         std::span<const Detection> detections);

  CountReport finalize() const;

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return config_; }
  int active_count() const;

 private:
  TrackerConfig config_;
  unsigned threads_;
  std::vector<Track> tracks_;
  std::vector<int> per_frame_active_;
  std::optional<long> last_frame_;
  int next_id_ = 1;
};

}  // namespace benthic
