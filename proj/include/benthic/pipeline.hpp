#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>

#include <opencv2/core.hpp>

#include "benthic/ingest.hpp"
#include "benthic/tracking.hpp"

namespace benthic {

using FrameProvider = std::function<cv::Mat(std::size_t)>;

// Runs the tracker over frames 0..n_frames-1. Frames without an entry in
// `detections` get an empty detection list. Throws InputError when the
// detection file references a frame past the end of the video.
CountReport count_objects(std::size_t n_frames, const FrameProvider& frame_at,
                          const DetectionFile& detections, const TrackerConfig& config,
                          unsigned threads);

// Flat `key = value` text. '#' starts a comment, blank lines are skipped and
// values may be double-quoted. Keys are the long flag names of the count
// command without the leading dashes ("iou-thresh", "kcf-lambda"); '_' and
// '-' are interchangeable. Throws InputError with the line number on bad syntax.
std::map<std::string, std::string> parse_config_text(std::string_view text);
// Applies recognised keys to `config`; throws InputError on unknown keys or
// unparsable values. Setting kcf-feature-mode without kcf-cell-size also
// resets the cell size to that mode's default.
void apply_config(TrackerConfig& config, const std::map<std::string, std::string>& entries);

// Effective configuration echoed into reports. Excludes the thread count.
nlohmann::ordered_json config_json(const TrackerConfig& config);

}  // namespace benthic
