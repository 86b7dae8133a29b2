#include "benthic/tracking.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <tuple>

#include "benthic/error.hpp"
#include "benthic/parallel.hpp"

namespace benthic {

unsigned threads_from_env() {
  const char* raw = std::getenv("BENTHIC_COUNT_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 0) return 0;
  return static_cast<unsigned>(v);
}

void TrackerConfig::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw InputError("iou_threshold must be in [0, 1]");
  }
  if (max_misses < 1) throw InputError("max_misses must be positive");
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw InputError("score_threshold must be in [0, 1]");
  }
  if (min_hits_to_count < 1) throw InputError("min_hits_to_count must be >= 1");
  try {
    kcf.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

AssociationResult associate(std::span<const Detection> detections,
                            std::span<const TrackBox> tracks, double threshold) {
  std::vector<Match> candidates;
  for (const auto& t : tracks) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double iou = iou_box(detections[d].bbox, t.box);
      if (iou > threshold) candidates.push_back({t.track_id, d, iou});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    return std::tuple(-a.iou, a.track_id, a.detection_index) <
           std::tuple(-b.iou, b.track_id, b.detection_index);
  });

  AssociationResult result;
  std::vector<bool> det_used(detections.size(), false);
  std::vector<int> tracks_used;
  for (const auto& c : candidates) {
    if (det_used[c.detection_index]) continue;
    if (std::find(tracks_used.begin(), tracks_used.end(), c.track_id) != tracks_used.end()) continue;
    det_used[c.detection_index] = true;
    tracks_used.push_back(c.track_id);
    result.matches.push_back(c);
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!det_used[d]) result.unmatched_detections.push_back(d);
  }
  for (const auto& t : tracks) {
    if (std::find(tracks_used.begin(), tracks_used.end(), t.track_id) == tracks_used.end()) {
      result.unmatched_tracks.push_back(t.track_id);
    }
  }
  std::sort(result.unmatched_tracks.begin(), result.unmatched_tracks.end());
  return result;
}

MultiTracker::MultiTracker(TrackerConfig config, unsigned threads)
    : config_(std::move(config)), threads_(threads) {
  config_.validate();
}

int MultiTracker::active_count() const {
  return static_cast<int>(std::count_if(tracks_.begin(), tracks_.end(), [](const Track& t) {
    return t.state == TrackState::kActive;
  }));
}

AssociationResult MultiTracker::step(long frame_index, const cv::Mat& frame,
                                     std::span<const Detection> detections) {
  if (frame_index < 0 || (last_frame_ && frame_index != *last_frame_ + 1)) {
    throw InputError("frame " + std::to_string(frame_index) + ": expected frame " +
                     std::to_string(last_frame_ ? *last_frame_ + 1 : 0));
  }
  if (frame.empty()) throw InputError("frame " + std::to_string(frame_index) + ": empty image");
  const cv::Mat gray = to_gray_unit(frame);
  const BBox frame_box(0.0, 0.0, gray.cols, gray.rows);

  // (1) confidence filter; keep a map back to the caller's indices.
  std::vector<Detection> kept;
  std::vector<std::size_t> original_index;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score < config_.score_threshold) continue;
    if (intersection_area(detections[i].bbox, frame_box) <= 0.0) {
      throw InputError("frame " + std::to_string(frame_index) + " detection " +
                       std::to_string(i) + ": bbox outside the frame");
    }
    kept.push_back(detections[i]);
    original_index.push_back(i);
  }

  // (2) advance every active track on this frame.
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].state == TrackState::kActive) active.push_back(i);
  }
  parallel_for(active.size(), threads_, [&](std::size_t k) {
    Track& t = tracks_[active[k]];
    TrackerUpdate u = tracker_update(t.model, gray);
    t.bbox = u.box;
    t.model = std::move(u.model);
  });

  // (3) associate against the updated boxes.
  std::vector<TrackBox> boxes;
  boxes.reserve(active.size());
  for (const std::size_t i : active) boxes.push_back({tracks_[i].id, tracks_[i].bbox});
  AssociationResult result = associate(kept, boxes, config_.iou_threshold);

  auto track_by_id = [&](int id) -> Track& {
    return *std::find_if(tracks_.begin(), tracks_.end(), [id](const Track& t) { return t.id == id; });
  };

  // (4) matched tracks snap to the detection and re-learn there.
  for (const auto& m : result.matches) {
    Track& t = track_by_id(m.track_id);
    const BBox& box = kept[m.detection_index].bbox;
    t.bbox = box;
    t.model = tracker_init(gray, box, config_.kcf);
    t.hits += 1;
    t.misses = 0;
    t.last_frame = frame_index;
  }

  // (5) births, in detection order.
  for (const std::size_t d : result.unmatched_detections) {
    const BBox& box = kept[d].bbox;
    tracks_.push_back(Track{next_id_++, box, tracker_init(gray, box, config_.kcf), 1, 0,
                            frame_index, frame_index, TrackState::kActive});
  }

  // (6) misses and removal.
  for (const int id : result.unmatched_tracks) {
    Track& t = track_by_id(id);
    t.misses += 1;
    if (t.misses >= config_.max_misses) t.state = TrackState::kRemoved;
  }

  per_frame_active_.push_back(active_count());
  last_frame_ = frame_index;

  for (auto& m : result.matches) m.detection_index = original_index[m.detection_index];
  for (auto& d : result.unmatched_detections) d = original_index[d];
  return result;
}

CountReport MultiTracker::finalize() const {
  CountReport report;
  report.per_frame_active = per_frame_active_;
  for (const auto& t : tracks_) {
    report.tracks.push_back({t.id, t.birth_frame, t.last_frame, t.hits});
    if (t.hits >= config_.min_hits_to_count) ++report.total_count;
  }
  return report;
}

}  // namespace benthic
