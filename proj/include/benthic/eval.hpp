#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "benthic/geometry.hpp"
#include "benthic/ingest.hpp"

namespace benthic {

// How a prediction's IoU is compared with the threshold. kGreater is the
// default; kGreaterEqual reproduces the COCO toolchain.
enum class IouRule { kGreater, kGreaterEqual };
enum class GeometryKind { kBox, kMask };

std::string_view to_string(IouRule rule);
std::string_view to_string(GeometryKind kind);
GeometryKind geometry_kind_from_string(std::string_view name);

using Region = std::variant<BBox, BitMask>;

// Throws std::invalid_argument on mixed kinds or mask size mismatch.
double region_iou(const Region& a, const Region& b);

struct ScoredRegion {
  Region region;
  double score = 0.0;
};

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct MatchResult {
  MatchCounts counts;
  std::vector<bool> is_tp;                            // per prediction, input order
  std::vector<std::optional<std::size_t>> matched_gt;  // per prediction, input order
  std::vector<std::size_t> order;                      // prediction indices by descending score
};

// Predictions are visited by descending score (stable for ties). Each takes
// the unmatched ground truth with the highest IoU (lowest index on ties) when
// that IoU passes the threshold; otherwise it is a false positive. Ground
// truths left unmatched are false negatives.
MatchResult match_predictions(std::span<const ScoredRegion> preds, std::span<const Region> gts,
                              double iou_threshold, IouRule rule = IouRule::kGreater);

struct ScoredFlag {
  double score = 0.0;
  bool tp = false;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score_threshold = 0.0;
};

// Cumulative precision and recall after each prediction. `flags` must be
// ordered by descending score. Throws std::invalid_argument when n_gt < 1.
std::vector<PRPoint> pr_curve(std::span<const ScoredFlag> flags, int n_gt);

// 101-point interpolated AP: mean over r in {0, 0.01, ..., 1} of the best
// precision reached at recall >= r (0 where recall never reaches r).
double average_precision(std::span<const PRPoint> curve);

struct ApResult {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  std::map<int, double> per_threshold;  // keyed by threshold in percent: 50, 55, ..., 95
  int num_predictions = 0;
  int num_ground_truth = 0;
};

// Pools predictions over all frames (single class) and computes AP at the
// IoU thresholds 0.50:0.05:0.95. Objects without a polygon are evaluated as
// their bounding rectangle in mask mode. Throws InputError when a prediction
// frame has no ground-truth frame or the ground truth has no objects.
ApResult evaluate(const DetectionFile& preds, const GroundTruthFile& gts, GeometryKind geometry,
                  IouRule rule = IouRule::kGreater);

nlohmann::ordered_json ap_result_json(const ApResult& result, GeometryKind geometry, IouRule rule);

// Mean over samples of min(counted, manual) / max(counted, manual).
// Throws InputError on length mismatch, empty input or non-positive counts.
double counting_accuracy(std::span<const long> counted, std::span<const long> manual);

}  // namespace benthic
