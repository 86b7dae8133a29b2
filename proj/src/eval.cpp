#include "benthic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "benthic/error.hpp"

namespace benthic {

namespace {

bool passes(double iou, double threshold, IouRule rule) {
  return rule == IouRule::kGreater ? iou > threshold : iou >= threshold;
}

std::vector<std::size_t> score_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// ious is row-major preds x gts.
MatchResult match_from_ious(std::span<const double> scores, std::size_t n_gt,
                            const std::vector<double>& ious, double threshold, IouRule rule) {
  const std::size_t n_pred = scores.size();
  MatchResult result;
  result.is_tp.assign(n_pred, false);
  result.matched_gt.assign(n_pred, std::nullopt);
  result.order = score_order(scores);
  std::vector<bool> gt_used(n_gt, false);
  for (const std::size_t p : result.order) {
    double best = -1.0;
    std::optional<std::size_t> best_gt;
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (gt_used[g]) continue;
      const double iou = ious[p * n_gt + g];
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt && passes(best, threshold, rule)) {
      gt_used[*best_gt] = true;
      result.is_tp[p] = true;
      result.matched_gt[p] = best_gt;
      ++result.counts.tp;
    } else {
      ++result.counts.fp;
    }
  }
  result.counts.fn = static_cast<int>(n_gt) - result.counts.tp;
  return result;
}

struct FrameRegions {
  std::vector<double> scores;
  std::vector<double> ious;  // preds x gts
  std::size_t n_gt = 0;
};

PolygonMask outline(const std::optional<PolygonMask>& polygon, const BBox& box) {
  return polygon ? *polygon : PolygonMask::rectangle(box);
}

// Rasterizes every region of one frame into a shared canvas that covers all
// of them; IoU is invariant to the canvas origin because the offset is integral.
std::vector<BitMask> rasterize_frame(const std::vector<PolygonMask>& polys) {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  for (const auto& p : polys) {
    for (const auto& v : p.vertices()) {
      x0 = std::min(x0, v.x);
      y0 = std::min(y0, v.y);
      x1 = std::max(x1, v.x);
      y1 = std::max(y1, v.y);
    }
  }
  std::vector<BitMask> out;
  if (polys.empty()) return out;
  const double ox = std::floor(x0);
  const double oy = std::floor(y0);
  const int width = std::max(1, static_cast<int>(std::ceil(x1) - ox) + 1);
  const int height = std::max(1, static_cast<int>(std::ceil(y1) - oy) + 1);
  out.reserve(polys.size());
  for (const auto& p : polys) out.push_back(rasterize(p, width, height, ox, oy));
  return out;
}

}  // namespace

std::string_view to_string(IouRule rule) { return rule == IouRule::kGreater ? "gt" : "ge"; }

std::string_view to_string(GeometryKind kind) { return kind == GeometryKind::kBox ? "box" : "mask"; }

GeometryKind geometry_kind_from_string(std::string_view name) {
  if (name == "box") return GeometryKind::kBox;
  if (name == "mask") return GeometryKind::kMask;
  throw InputError("geometry must be box or mask");
}

double region_iou(const Region& a, const Region& b) {
  if (a.index() != b.index()) throw std::invalid_argument("region_iou: mixed geometry kinds");
  if (const auto* ba = std::get_if<BBox>(&a)) return iou_box(*ba, std::get<BBox>(b));
  return iou_mask(std::get<BitMask>(a), std::get<BitMask>(b));
}

MatchResult match_predictions(std::span<const ScoredRegion> preds, std::span<const Region> gts,
                              double iou_threshold, IouRule rule) {
  std::optional<std::size_t> kind;
  auto check_kind = [&](const Region& r) {
    if (!kind) kind = r.index();
    if (r.index() != *kind) throw std::invalid_argument("match_predictions: mixed geometry kinds");
  };
  for (const auto& p : preds) check_kind(p.region);
  for (const auto& g : gts) check_kind(g);

  std::vector<double> scores;
  std::vector<double> ious;
  scores.reserve(preds.size());
  ious.reserve(preds.size() * gts.size());
  for (const auto& p : preds) {
    scores.push_back(p.score);
    for (const auto& g : gts) ious.push_back(region_iou(p.region, g));
  }
  return match_from_ious(scores, gts.size(), ious, iou_threshold, rule);
}

std::vector<PRPoint> pr_curve(std::span<const ScoredFlag> flags, int n_gt) {
  if (n_gt < 1) throw std::invalid_argument("pr_curve: needs at least one ground truth");
  std::vector<PRPoint> curve;
  curve.reserve(flags.size());
  int tp = 0;
  int seen = 0;
  for (const auto& f : flags) {
    ++seen;
    if (f.tp) ++tp;
    curve.push_back({static_cast<double>(tp) / n_gt, static_cast<double>(tp) / seen, f.score});
  }
  return curve;
}

double average_precision(std::span<const PRPoint> curve) {
  if (curve.empty()) throw std::invalid_argument("average_precision: empty curve");
  // Suffix maximum of precision, so interp[i] = max precision at index >= i.
  std::vector<double> interp(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    interp[i] = running;
  }
  double total = 0.0;
  std::size_t i = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    // Recall is non-decreasing along the curve.
    while (i < curve.size() && curve[i].recall < r) ++i;
    if (i < curve.size()) total += interp[i];
  }
  return total / 101.0;
}

ApResult evaluate(const DetectionFile& preds, const GroundTruthFile& gts, GeometryKind geometry,
                  IouRule rule) {
  for (const auto& f : preds.frames) {
    if (gts.find(f.index) == nullptr) {
      throw InputError("frame " + std::to_string(f.index) + ": no ground truth for predicted frame");
    }
  }

  std::vector<FrameRegions> frames;
  ApResult result;
  for (const auto& gf : gts.frames) {
    const DetectionFrame* pf = preds.find(gf.index);
    FrameRegions fr;
    fr.n_gt = gf.objects.size();
    const std::size_t n_pred = pf != nullptr ? pf->detections.size() : 0;
    if (geometry == GeometryKind::kBox) {
      for (std::size_t p = 0; p < n_pred; ++p) {
        for (const auto& g : gf.objects) fr.ious.push_back(iou_box(pf->detections[p].bbox, g.bbox));
      }
    } else {
      std::vector<PolygonMask> polys;
      for (std::size_t p = 0; p < n_pred; ++p) {
        polys.push_back(outline(pf->detections[p].mask, pf->detections[p].bbox));
      }
      for (const auto& g : gf.objects) polys.push_back(outline(g.polygon, g.bbox));
      const auto masks = rasterize_frame(polys);
      for (std::size_t p = 0; p < n_pred; ++p) {
        for (std::size_t g = 0; g < fr.n_gt; ++g) {
          fr.ious.push_back(iou_mask(masks[p], masks[n_pred + g]));
        }
      }
    }
    for (std::size_t p = 0; p < n_pred; ++p) fr.scores.push_back(pf->detections[p].score);
    result.num_predictions += static_cast<int>(n_pred);
    result.num_ground_truth += static_cast<int>(fr.n_gt);
    frames.push_back(std::move(fr));
  }
  if (result.num_ground_truth == 0) throw InputError("ground truth contains no objects");

  double sum = 0.0;
  for (int pct = 50; pct <= 95; pct += 5) {
    const double threshold = pct / 100.0;
    std::vector<ScoredFlag> flags;
    for (const auto& fr : frames) {
      const MatchResult m = match_from_ious(fr.scores, fr.n_gt, fr.ious, threshold, rule);
      for (const std::size_t p : m.order) flags.push_back({fr.scores[p], m.is_tp[p]});
    }
    std::stable_sort(flags.begin(), flags.end(),
                     [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });
    const double ap =
        flags.empty() ? 0.0 : average_precision(pr_curve(flags, result.num_ground_truth));
    result.per_threshold[pct] = ap;
    sum += ap;
  }
  result.ap = sum / 10.0;
  result.ap50 = result.per_threshold.at(50);
  result.ap75 = result.per_threshold.at(75);
  return result;
}

nlohmann::ordered_json ap_result_json(const ApResult& result, GeometryKind geometry, IouRule rule) {
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [pct, ap] : result.per_threshold) {
    char key[8];
    std::snprintf(key, sizeof key, "%.2f", pct / 100.0);
    per[key] = round_sig6(ap);
  }
  nlohmann::ordered_json root;
  root["schema_version"] = kSchemaVersion;
  root["geometry"] = to_string(geometry);
  root["iou_rule"] = to_string(rule);
  root["ap"] = round_sig6(result.ap);
  root["ap50"] = round_sig6(result.ap50);
  root["ap75"] = round_sig6(result.ap75);
  root["per_threshold"] = std::move(per);
  root["num_predictions"] = result.num_predictions;
  root["num_ground_truth"] = result.num_ground_truth;
  return root;
}

double counting_accuracy(std::span<const long> counted, std::span<const long> manual) {
  if (counted.empty() || counted.size() != manual.size()) {
    throw InputError("counting_accuracy: need equal, non-empty count lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < counted.size(); ++i) {
    if (counted[i] <= 0 || manual[i] <= 0) {
      throw InputError("counting_accuracy: sample " + std::to_string(i) +
                       ": counts must be positive");
    }
    total += static_cast<double>(std::min(counted[i], manual[i])) /
             static_cast<double>(std::max(counted[i], manual[i]));
  }
  return total / static_cast<double>(counted.size());
}

}  // namespace benthic
