#include "benthic/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "benthic/error.hpp"

namespace benthic {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Location prefix used in every validation message.
class Where {
 public:
  explicit Where(std::string prefix) : prefix_(std::move(prefix)) {}
  [[noreturn]] void fail(const std::string& what) const { throw InputError(prefix_ + ": " + what); }
  Where sub(const std::string& suffix) const { return Where(prefix_ + " " + suffix); }

 private:
  std::string prefix_;
};

json parse_json(std::string_view bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

double number(const json& v, const Where& where, const char* field) {
  if (!v.is_number()) where.fail(std::string(field) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) where.fail(std::string(field) + " must be finite");
  return d;
}

void check_schema_version(const json& root) {
  if (!root.is_object()) throw InputError("top level must be a JSON object");
  if (auto it = root.find("schema_version"); it != root.end()) {
    if (!it->is_number_integer() || it->get<long>() != kSchemaVersion) {
      throw InputError("unsupported schema_version (expected 1)");
    }
  }
}

void parse_header(const json& root, std::string& video, std::optional<double>& fps) {
  if (auto it = root.find("video"); it != root.end()) {
    if (!it->is_string()) throw InputError("video must be a string");
    video = it->get<std::string>();
  }
  if (auto it = root.find("fps"); it != root.end() && !it->is_null()) {
    fps = number(*it, Where("header"), "fps");
    if (*fps <= 0.0) throw InputError("header: fps must be positive");
  }
}

BBox parse_bbox(const json& obj, const Where& where) {
  auto it = obj.find("bbox");
  if (it == obj.end()) where.fail("missing bbox");
  if (!it->is_array() || it->size() != 4) where.fail("bbox must be [x, y, w, h]");
  const double x = number((*it)[0], where, "bbox x");
  const double y = number((*it)[1], where, "bbox y");
  const double w = number((*it)[2], where, "bbox w");
  const double h = number((*it)[3], where, "bbox h");
  if (!(w > 0.0) || !(h > 0.0)) where.fail("bbox width and height must be positive");
  return {x, y, w, h};
}

std::optional<PolygonMask> parse_polygon(const json& obj, const Where& where) {
  auto it = obj.find("polygon");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_array() || it->size() < 3) where.fail("polygon needs at least 3 vertices");
  std::vector<Point2> verts;
  for (const auto& p : *it) {
    if (!p.is_array() || p.size() != 2) where.fail("polygon vertex must be [x, y]");
    verts.push_back({number(p[0], where, "polygon x"), number(p[1], where, "polygon y")});
  }
  return PolygonMask(std::move(verts));
}

// Shared walk over "frames": validates indices and hands each item list to
// the per-item parser.
template <typename Frame, typename ItemFn>
std::vector<Frame> parse_frames(const json& root, const char* const* item_keys, const char* noun,
                                ItemFn&& item_fn) {
  auto frames_it = root.find("frames");
  if (frames_it == root.end()) throw InputError("missing frames");
  if (!frames_it->is_array()) throw InputError("frames must be an array");

  std::vector<Frame> frames;
  std::optional<long> previous;
  std::size_t ordinal = 0;
  for (const auto& f : *frames_it) {
    const Where at_ordinal("frames[" + std::to_string(ordinal++) + "]");
    if (!f.is_object()) at_ordinal.fail("frame must be an object");
    auto idx = f.find("index");
    if (idx == f.end() || !idx->is_number_integer()) at_ordinal.fail("index must be an integer");
    const long index = idx->get<long>();
    const Where where("frame " + std::to_string(index));
    if (index < 0) where.fail("index must be >= 0");
    if (previous && index <= *previous) {
      where.fail("frame indices must be strictly increasing (previous " +
                 std::to_string(*previous) + ")");
    }
    previous = index;

    Frame frame;
    frame.index = index;
    const json* items = nullptr;
    for (const char* const* key = item_keys; *key != nullptr; ++key) {
      if (auto it = f.find(*key); it != f.end()) {
        items = &*it;
        break;
      }
    }
    if (items != nullptr) {
      if (!items->is_array()) where.fail(std::string(item_keys[0]) + " must be an array");
      std::size_t n = 0;
      for (const auto& item : *items) {
        const Where item_where = where.sub(std::string(noun) + " " + std::to_string(n++));
        if (!item.is_object()) item_where.fail("entry must be an object");
        item_fn(frame, item, item_where);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

ordered_json bbox_json(const BBox& b) { return ordered_json::array({b.x(), b.y(), b.w(), b.h()}); }

ordered_json polygon_json(const PolygonMask& p) {
  ordered_json arr = ordered_json::array();
  for (const auto& v : p.vertices()) arr.push_back(ordered_json::array({v.x, v.y}));
  return arr;
}

ordered_json header_json(const std::string& video, const std::optional<double>& fps) {
  ordered_json root;
  root["schema_version"] = kSchemaVersion;
  root["video"] = video;
  if (fps) root["fps"] = *fps;
  return root;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const char* e : {".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".ppm", ".tif", ".tiff"}) {
    if (ext == e) return true;
  }
  return false;
}

}  // namespace

const DetectionFrame* DetectionFile::find(long index) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), index,
                             [](const DetectionFrame& f, long i) { return f.index < i; });
  return it != frames.end() && it->index == index ? &*it : nullptr;
}

const GroundTruthFrame* GroundTruthFile::find(long index) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), index,
                             [](const GroundTruthFrame& f, long i) { return f.index < i; });
  return it != frames.end() && it->index == index ? &*it : nullptr;
}

DetectionFile parse_detections(std::string_view bytes) {
  const json root = parse_json(bytes);
  check_schema_version(root);
  DetectionFile file;
  parse_header(root, file.video, file.fps);
  static const char* const kKeys[] = {"detections", nullptr};
  file.frames = parse_frames<DetectionFrame>(
      root, kKeys, "detection", [](DetectionFrame& frame, const json& item, const Where& where) {
        const BBox box = parse_bbox(item, where);
        auto s = item.find("score");
        if (s == item.end()) where.fail("missing score");
        const double score = number(*s, where, "score");
        if (!(score >= 0.0 && score <= 1.0)) where.fail("score out of range");
        frame.detections.push_back({box, score, parse_polygon(item, where)});
      });
  return file;
}

GroundTruthFile parse_ground_truth(std::string_view bytes) {
  const json root = parse_json(bytes);
  check_schema_version(root);
  GroundTruthFile file;
  parse_header(root, file.video, file.fps);
  static const char* const kKeys[] = {"objects", "detections", nullptr};
  file.frames = parse_frames<GroundTruthFrame>(
      root, kKeys, "object", [](GroundTruthFrame& frame, const json& item, const Where& where) {
        GroundTruthObject obj{parse_bbox(item, where), std::string(kLiveOyster),
                              parse_polygon(item, where)};
        if (auto l = item.find("label"); l != item.end()) {
          if (!l->is_string() || l->get<std::string>().empty()) {
            where.fail("label must be a non-empty string");
          }
          obj.label = l->get<std::string>();
        }
        frame.objects.push_back(std::move(obj));
      });
  return file;
}

std::string serialize_detections(const DetectionFile& file) {
  ordered_json root = header_json(file.video, file.fps);
  ordered_json frames = ordered_json::array();
  for (const auto& f : file.frames) {
    ordered_json dets = ordered_json::array();
    for (const auto& d : f.detections) {
      ordered_json item;
      item["bbox"] = bbox_json(d.bbox);
      item["score"] = d.score;
      if (d.mask) item["polygon"] = polygon_json(*d.mask);
      dets.push_back(std::move(item));
    }
    frames.push_back(ordered_json{{"index", f.index}, {"detections", std::move(dets)}});
  }
  root["frames"] = std::move(frames);
  return root.dump() + "\n";
}

std::string serialize_ground_truth(const GroundTruthFile& file) {
  ordered_json root = header_json(file.video, file.fps);
  ordered_json frames = ordered_json::array();
  for (const auto& f : file.frames) {
    ordered_json objs = ordered_json::array();
    for (const auto& o : f.objects) {
      ordered_json item;
      item["bbox"] = bbox_json(o.bbox);
      item["label"] = o.label;
      if (o.polygon) item["polygon"] = polygon_json(*o.polygon);
      objs.push_back(std::move(item));
    }
    frames.push_back(ordered_json{{"index", f.index}, {"objects", std::move(objs)}});
  }
  root["frames"] = std::move(frames);
  return root.dump() + "\n";
}

double round_sig6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return std::strtod(buf, nullptr);
}

namespace {

ordered_json report_body(const CountReport& report) {
  ordered_json tracks = ordered_json::array();
  for (const auto& t : report.tracks) {
    tracks.push_back(ordered_json{{"id", t.id},
                                  {"birth_frame", t.birth_frame},
                                  {"last_frame", t.last_frame},
                                  {"hits", t.hits}});
  }
  ordered_json body;
  body["total_count"] = report.total_count;
  body["tracks"] = std::move(tracks);
  body["per_frame_active"] = report.per_frame_active;
  return body;
}

}  // namespace

std::string write_report(const CountReport& report) { return report_body(report).dump() + "\n"; }

std::string write_report(const CountReport& report, const ordered_json& config) {
  ordered_json root;
  root["schema_version"] = kSchemaVersion;
  const ordered_json body = report_body(report);
  for (const auto& [key, value] : body.items()) root[key] = value;
  root["config"] = config;
  return root.dump() + "\n";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

cv::Mat FrameSource::read(std::size_t i) const {
  const auto& p = paths_.at(i);
  cv::Mat img = cv::imread(p.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) throw InputError("cannot decode image " + p.string());
  if (img.cols != width_ || img.rows != height_) {
    throw InputError("image " + p.string() + " changed dimensions");
  }
  return img;
}

FrameSource load_frames(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw InputError("no image files in " + dir.string());
  return load_frames(std::move(files));
}

FrameSource load_frames(std::vector<fs::path> files) {
  if (files.empty()) throw InputError("no frames given");
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  int width = -1;
  int height = -1;
  for (const auto& f : files) {
    const cv::Mat img = cv::imread(f.string(), cv::IMREAD_GRAYSCALE);
    if (img.empty()) throw InputError("cannot decode image " + f.string());
    if (width < 0) {
      width = img.cols;
      height = img.rows;
    } else if (img.cols != width || img.rows != height) {
      throw InputError("frame dimension mismatch: " + f.string() + " is " +
                       std::to_string(img.cols) + "x" + std::to_string(img.rows) + ", expected " +
                       std::to_string(width) + "x" + std::to_string(height));
    }
  }
  return FrameSource(std::move(files), width, height);
}

}  // namespace benthic
