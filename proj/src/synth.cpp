#include "benthic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <opencv2/imgproc.hpp>

#include "benthic/error.hpp"

namespace benthic::synth {

namespace {

constexpr int kOutlineVertices = 24;
constexpr int kMaxPlacementAttempts = 10000;

// Sub-stream ids for mix_seed.
constexpr std::uint64_t kPlacementStream = 1;
constexpr std::uint64_t kTextureStream = 2;
constexpr std::uint64_t kDetectionStream = 3;
constexpr std::uint64_t kPixelNoiseStream = 0x100000;

std::optional<BBox> clip_box(const BBox& b, double x0, double y0, double x1, double y1) {
  const double l = std::max(b.x(), x0);
  const double t = std::max(b.y(), y0);
  const double r = std::min(b.right(), x1);
  const double d = std::min(b.bottom(), y1);
  if (r - l <= 0.0 || d - t <= 0.0) return std::nullopt;
  return BBox(l, t, r - l, d - t);
}

PolygonMask ellipse_outline(const BBox& box) {
  const Point2 c = box.center();
  std::vector<Point2> verts;
  verts.reserve(kOutlineVertices);
  for (int k = 0; k < kOutlineVertices; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / kOutlineVertices;
    verts.push_back({c.x + 0.5 * box.w() * std::cos(theta), c.y + 0.5 * box.h() * std::sin(theta)});
  }
  return PolygonMask(std::move(verts));
}

cv::Mat noise_grid(Rng& rng, int rows, int cols, double lo, double hi) {
  cv::Mat grid(rows, cols, CV_32F);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) grid.at<float>(i, j) = static_cast<float>(rng.uniform(lo, hi));
  }
  return grid;
}

cv::Mat render_world(const SceneSpec& spec, const std::vector<SceneObject>& objects) {
  Rng rng(mix_seed(spec.seed, kTextureStream));
  cv::Mat background;
  cv::resize(noise_grid(rng, spec.world_h / 16 + 2, spec.world_w / 16 + 2, 95.0, 125.0), background,
             cv::Size(spec.world_w, spec.world_h), 0, 0, cv::INTER_LINEAR);

  for (const auto& obj : objects) {
    const int ox = static_cast<int>(std::floor(obj.world_box.x()));
    const int oy = static_cast<int>(std::floor(obj.world_box.y()));
    const int w = static_cast<int>(std::ceil(obj.world_box.right())) - ox;
    const int h = static_cast<int>(std::ceil(obj.world_box.bottom())) - oy;
    cv::Mat texture;
    cv::resize(noise_grid(rng, h / 4 + 2, w / 4 + 2, obj.mean_intensity - 45.0,
                          obj.mean_intensity + 45.0),
               texture, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
    const BitMask mask = rasterize(obj.world_outline, w, h, ox, oy);
    for (int r = 0; r < h; ++r) {
      const int wy = oy + r;
      if (wy < 0 || wy >= spec.world_h) continue;
      for (int c = 0; c < w; ++c) {
        const int wx = ox + c;
        if (wx < 0 || wx >= spec.world_w || !mask.get(r, c)) continue;
        background.at<float>(wy, wx) = texture.at<float>(r, c);
      }
    }
  }
  cv::Mat world;
  background.convertTo(world, CV_8U);  // rounds and saturates
  return world;
}

std::vector<SceneObject> place_objects(const SceneSpec& spec) {
  Rng rng(mix_seed(spec.seed, kPlacementStream));
  const BBox region = spec.placement_region.value_or(BBox(0, 0, spec.world_w, spec.world_h));
  std::vector<BBox> boxes;
  for (int i = 0; i < spec.n_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double w = rng.uniform(spec.object_size_min, spec.object_size_max);
      const double h = rng.uniform(spec.object_size_min, spec.object_size_max);
      if (w > region.w() || h > region.h()) continue;
      const BBox candidate(rng.uniform(region.x(), region.right() - w),
                           rng.uniform(region.y(), region.bottom() - h), w, h);
      if (spec.separation) {
        const BBox grown(candidate.x() - spec.min_gap, candidate.y() - spec.min_gap,
                         candidate.w() + 2 * spec.min_gap, candidate.h() + 2 * spec.min_gap);
        const bool clash = std::any_of(boxes.begin(), boxes.end(), [&](const BBox& b) {
          return intersection_area(grown, b) > 0.0;
        });
        if (clash) continue;
      }
      boxes.push_back(candidate);
      placed = true;
    }
    if (!placed) {
      throw InputError("synth: cannot place object " + std::to_string(i) + " of " +
                       std::to_string(spec.n_objects) + " without overlap");
    }
  }

  // Stratified, shuffled mean intensities keep every object distinct.
  std::vector<int> rank(boxes.size());
  std::iota(rank.begin(), rank.end(), 0);
  for (std::size_t i = rank.size(); i > 1; --i) {
    std::swap(rank[i - 1], rank[static_cast<std::size_t>(rng.next() % i)]);
  }
  std::vector<SceneObject> objects;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double mean = 40.0 + 180.0 * (rank[i] + 0.5) / static_cast<double>(boxes.size());
    objects.push_back({boxes[i], ellipse_outline(boxes[i]), mean});
  }
  return objects;
}

}  // namespace

double Rng::gaussian() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > limit);
  return k - 1;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SceneSpec::validate() const {
  if (n_objects < 0) throw InputError("synth: n_objects must be >= 0");
  if (n_frames < 1) throw InputError("synth: n_frames must be >= 1");
  if (!(object_size_min > 0.0) || !(object_size_max >= object_size_min)) {
    throw InputError("synth: object_size_range must satisfy 0 < min <= max");
  }
  if (world_w < 1 || world_h < 1 || camera_w < 1 || camera_h < 1) {
    throw InputError("synth: sizes must be positive");
  }
  if (camera_w > world_w || camera_h > world_h) throw InputError("synth: camera larger than world");
  if (min_gap < 0.0) throw InputError("synth: min_gap must be >= 0");
  const auto& n = noise;
  if (!(n.detection_dropout_prob >= 0.0 && n.detection_dropout_prob <= 1.0)) {
    throw InputError("synth: detection_dropout_prob must be in [0, 1]");
  }
  if (n.bbox_jitter_sigma < 0.0 || n.false_positive_rate < 0.0 || n.pixel_noise_sigma < 0.0) {
    throw InputError("synth: noise magnitudes must be >= 0");
  }
  if (n.false_positive_rate > 0.0 &&
      (object_size_max > camera_w || object_size_max > camera_h)) {
    throw InputError("synth: false positives need object_size_max within the camera");
  }
  constexpr double kSlack = 1e-9;
  for (const int t : {0, n_frames - 1}) {
    const Point2 p = camera_position(t);
    if (p.x < -kSlack || p.y < -kSlack || p.x + camera_w > world_w + kSlack ||
        p.y + camera_h > world_h + kSlack) {
      throw InputError("synth: camera path leaves the world at frame " + std::to_string(t));
    }
  }
}

Point2 SceneSpec::camera_position(int frame) const {
  const Point2 start = camera_start.value_or(
      Point2{camera_dx >= 0.0 ? 0.0 : static_cast<double>(world_w - camera_w),
             camera_dy >= 0.0 ? 0.0 : static_cast<double>(world_h - camera_h)});
  return {start.x + frame * camera_dx, start.y + frame * camera_dy};
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(std::string("synth spec: bad value for ") + key);
  }
}

std::pair<double, double> pair_field(const nlohmann::json& j, const char* key,
                                     std::pair<double, double> fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw InputError(std::string("synth spec: ") + key + " must be a pair of numbers");
  }
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

}  // namespace

SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("synth spec: top level must be an object");
  SceneSpec s;
  s.seed = field<std::uint64_t>(j, "seed", s.seed);
  s.n_objects = field<int>(j, "n_objects", s.n_objects);
  std::tie(s.object_size_min, s.object_size_max) =
      pair_field(j, "object_size_range", {s.object_size_min, s.object_size_max});
  auto world = pair_field(j, "world_size", {s.world_w, s.world_h});
  auto camera = pair_field(j, "camera_size", {s.camera_w, s.camera_h});
  s.world_w = static_cast<int>(world.first);
  s.world_h = static_cast<int>(world.second);
  s.camera_w = static_cast<int>(camera.first);
  s.camera_h = static_cast<int>(camera.second);
  std::tie(s.camera_dx, s.camera_dy) = pair_field(j, "camera_velocity", {s.camera_dx, s.camera_dy});
  s.n_frames = field<int>(j, "n_frames", s.n_frames);
  s.separation = field<bool>(j, "separation", s.separation);
  s.min_gap = field<double>(j, "min_gap", s.min_gap);
  if (j.contains("camera_start") && !j["camera_start"].is_null()) {
    auto p = pair_field(j, "camera_start", {0, 0});
    s.camera_start = Point2{p.first, p.second};
  }
  if (auto it = j.find("placement_region"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4) {
      throw InputError("synth spec: placement_region must be [x, y, w, h]");
    }
    try {
      s.placement_region = BBox((*it)[0].get<double>(), (*it)[1].get<double>(),
                                (*it)[2].get<double>(), (*it)[3].get<double>());
    } catch (const std::exception& e) {
      throw InputError(std::string("synth spec: placement_region: ") + e.what());
    }
  }
  if (auto it = j.find("noise"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw InputError("synth spec: noise must be an object");
    auto& n = s.noise;
    n.detection_dropout_prob = field<double>(*it, "detection_dropout_prob", n.detection_dropout_prob);
    n.bbox_jitter_sigma = field<double>(*it, "bbox_jitter_sigma", n.bbox_jitter_sigma);
    n.false_positive_rate = field<double>(*it, "false_positive_rate", n.false_positive_rate);
    n.pixel_noise_sigma = field<double>(*it, "pixel_noise_sigma", n.pixel_noise_sigma);
  }
  s.validate();
  return s;
}

nlohmann::ordered_json scene_spec_to_json(const SceneSpec& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["n_objects"] = s.n_objects;
  j["object_size_range"] = {s.object_size_min, s.object_size_max};
  j["world_size"] = {s.world_w, s.world_h};
  j["camera_size"] = {s.camera_w, s.camera_h};
  j["camera_velocity"] = {s.camera_dx, s.camera_dy};
  j["n_frames"] = s.n_frames;
  j["separation"] = s.separation;
  j["min_gap"] = s.min_gap;
  const Point2 start = s.camera_position(0);
  j["camera_start"] = {start.x, start.y};
  if (s.placement_region) {
    const auto& r = *s.placement_region;
    j["placement_region"] = {r.x(), r.y(), r.w(), r.h()};
  }
  j["noise"] = {{"detection_dropout_prob", s.noise.detection_dropout_prob},
                {"bbox_jitter_sigma", s.noise.bbox_jitter_sigma},
                {"false_positive_rate", s.noise.false_positive_rate},
                {"pixel_noise_sigma", s.noise.pixel_noise_sigma}};
  return j;
}

std::vector<Point2> clip_polygon(const std::vector<Point2>& poly, double w, double h) {
  // Sutherland-Hodgman against the four frame edges.
  std::vector<Point2> out = poly;
  auto clip = [&](auto inside, auto cross) {
    std::vector<Point2> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2& cur = in[i];
      const Point2& prev = in[(i + in.size() - 1) % in.size()];
      const bool cur_in = inside(cur);
      const bool prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) out.push_back(cross(prev, cur));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(cross(prev, cur));
      }
    }
  };
  auto at_x = [](double x) {
    return [x](const Point2& a, const Point2& b) {
      return Point2{x, a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)};
    };
  };
  auto at_y = [](double y) {
    return [y](const Point2& a, const Point2& b) {
      return Point2{a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y), y};
    };
  };
  clip([](const Point2& p) { return p.x >= 0.0; }, at_x(0.0));
  clip([w](const Point2& p) { return p.x <= w; }, at_x(w));
  clip([](const Point2& p) { return p.y >= 0.0; }, at_y(0.0));
  clip([h](const Point2& p) { return p.y <= h; }, at_y(h));
  return out;
}

Scene::Scene(SceneSpec spec, std::vector<SceneObject> objects, cv::Mat world)
    : spec_(std::move(spec)), objects_(std::move(objects)), world_(std::move(world)) {}

cv::Mat Scene::frame(int t) const {
  if (t < 0 || t >= spec_.n_frames) throw std::out_of_range("synth: frame index out of range");
  const Point2 p = spec_.camera_position(t);
  const cv::Matx23d shift(1.0, 0.0, -p.x, 0.0, 1.0, -p.y);
  cv::Mat view;
  cv::warpAffine(world_, view, shift, cv::Size(spec_.camera_w, spec_.camera_h), cv::INTER_LINEAR,
                 cv::BORDER_REPLICATE);
  if (spec_.noise.pixel_noise_sigma > 0.0) {
    Rng rng(mix_seed(spec_.seed, kPixelNoiseStream + static_cast<std::uint64_t>(t)));
    for (int r = 0; r < view.rows; ++r) {
      auto* row = view.ptr<std::uint8_t>(r);
      for (int c = 0; c < view.cols; ++c) {
        const double v = row[c] + spec_.noise.pixel_noise_sigma * rng.gaussian();
        row[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return view;
}

Scene generate(const SceneSpec& spec) {
  spec.validate();
  std::vector<SceneObject> objects = place_objects(spec);
  cv::Mat world = render_world(spec, objects);
  Scene scene(spec, objects, std::move(world));

  scene.truth.video = "synth";
  std::vector<bool> seen(objects.size(), false);
  for (int t = 0; t < spec.n_frames; ++t) {
    const Point2 cam = spec.camera_position(t);
    GroundTruthFrame frame;
    frame.index = t;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const BBox& wb = objects[i].world_box;
      const auto visible = clip_box(wb, cam.x, cam.y, cam.x + spec.camera_w, cam.y + spec.camera_h);
      if (!visible || visible->area() < 0.5 * wb.area()) continue;
      seen[i] = true;
      GroundTruthObject obj{visible->translated(-cam.x, -cam.y), std::string(kLiveOyster), {}};
      std::vector<Point2> local;
      for (const auto& v : objects[i].world_outline.vertices()) local.push_back({v.x - cam.x, v.y - cam.y});
      local = clip_polygon(local, spec.camera_w, spec.camera_h);
      if (local.size() >= 3) {
        PolygonMask poly(std::move(local));
        if (poly.area() > 0.0) obj.polygon = std::move(poly);
      }
      frame.objects.push_back(std::move(obj));
    }
    scene.truth.frames.push_back(std::move(frame));
  }
  scene.true_count = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  scene.detections = corrupt(scene.truth, spec.noise, mix_seed(spec.seed, kDetectionStream),
                             spec.camera_w, spec.camera_h, spec.object_size_min,
                             spec.object_size_max);
  return scene;
}

DetectionFile corrupt(const GroundTruthFile& truth, const NoiseSpec& noise, std::uint64_t seed,
                      int frame_w, int frame_h, double size_min, double size_max) {
  if (!(noise.detection_dropout_prob >= 0.0 && noise.detection_dropout_prob <= 1.0)) {
    throw InputError("corrupt: dropout probability must be in [0, 1]");
  }
  Rng rng(seed);
  DetectionFile out;
  out.video = truth.video;
  out.fps = truth.fps;
  for (const auto& gf : truth.frames) {
    DetectionFrame df;
    df.index = gf.index;
    for (const auto& obj : gf.objects) {
      if (rng.uniform() < noise.detection_dropout_prob) continue;
      if (noise.bbox_jitter_sigma <= 0.0) {
        df.detections.push_back({obj.bbox, 1.0, obj.polygon});
        continue;
      }
      const double s = noise.bbox_jitter_sigma;
      const double x = obj.bbox.x() + s * rng.gaussian();
      const double y = obj.bbox.y() + s * rng.gaussian();
      const double w = std::max(1.0, obj.bbox.w() + s * rng.gaussian());
      const double h = std::max(1.0, obj.bbox.h() + s * rng.gaussian());
      // Jittered boxes drop the outline; mask evaluation falls back to the box.
      if (auto clipped = clip_box(BBox(x, y, w, h), 0.0, 0.0, frame_w, frame_h)) {
        df.detections.push_back({*clipped, 1.0, std::nullopt});
      }
    }
    const int n_fp = rng.poisson(noise.false_positive_rate);
    for (int k = 0; k < n_fp; ++k) {
      const double w = rng.uniform(size_min, size_max);
      const double h = rng.uniform(size_min, size_max);
      const double x = rng.uniform(0.0, std::max(0.0, frame_w - w));
      const double y = rng.uniform(0.0, std::max(0.0, frame_h - h));
      df.detections.push_back({BBox(x, y, w, h), rng.uniform(0.5, 1.0), std::nullopt});
    }
    out.frames.push_back(std::move(df));
  }
  return out;
}

}  // namespace benthic::synth
