#include "benthic/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>
#include <string_view>

#include "benthic/error.hpp"

namespace benthic {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string normalize_key(std::string_view key) {
  std::string k(key);
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InputError("config: " + key + ": not a number: " + value);
  }
}

int to_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InputError("config: " + key + ": not an integer: " + value);
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InputError("config: " + key + ": not a boolean: " + value);
}

}  // namespace

CountReport count_objects(std::size_t n_frames, const FrameProvider& frame_at,
                          const DetectionFile& detections, const TrackerConfig& config,
                          unsigned threads) {
  if (!detections.frames.empty() &&
      detections.frames.back().index >= static_cast<long>(n_frames)) {
    throw InputError("frame " + std::to_string(detections.frames.back().index) +
                     ": detections reference a frame past the end of the video (" +
                     std::to_string(n_frames) + " frames)");
  }
  MultiTracker tracker(config, threads);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const long index = static_cast<long>(t);
    const DetectionFrame* df = detections.find(index);
    static const std::vector<Detection> kNone;
    tracker.step(index, frame_at(t), df != nullptr ? df->detections : kNone);
  }
  return tracker.finalize();
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;

    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    entries[normalize_key(key)] = std::string(value);
  }
  return entries;
}

void apply_config(TrackerConfig& c, const std::map<std::string, std::string>& entries) {
  for (const auto& [raw_key, value] : entries) {
    const std::string key = normalize_key(raw_key);
    auto& k = c.kcf;
    try {
      if (key == "iou-thresh") c.iou_threshold = to_double(key, value);
      else if (key == "max-misses") c.max_misses = to_int(key, value);
      else if (key == "score-thresh") c.score_threshold = to_double(key, value);
      else if (key == "min-hits") c.min_hits_to_count = to_int(key, value);
      else if (key == "kcf-lambda") k.lambda = to_double(key, value);
      else if (key == "kcf-kernel-sigma") k.kernel_sigma = to_double(key, value);
      else if (key == "kcf-output-sigma-factor") k.output_sigma_factor = to_double(key, value);
      else if (key == "kcf-padding") k.padding = to_double(key, value);
      else if (key == "kcf-learning-rate") k.learning_rate = to_double(key, value);
      else if (key == "kcf-cell-size") k.cell_size = to_int(key, value);
      else if (key == "kcf-feature-mode") k.feature_mode = feature_mode_from_string(value);
      else if (key == "kcf-kernel") k.kernel = kernel_type_from_string(value);
      else if (key == "kcf-subpixel") k.subpixel = to_bool(key, value);
      else throw InputError("config: unknown key " + raw_key);
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("config: ") + e.what());
    }
  }
  auto has = [&](std::string_view key) {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const auto& e) { return normalize_key(e.first) == key; });
  };
  if (has("kcf-feature-mode") && !has("kcf-cell-size")) {
    c.kcf.cell_size = KcfParams::defaults(c.kcf.feature_mode).cell_size;
  }
}

nlohmann::ordered_json config_json(const TrackerConfig& c) {
  nlohmann::ordered_json kcf;
  kcf["lambda"] = round_sig6(c.kcf.lambda);
  kcf["kernel_sigma"] = round_sig6(c.kcf.kernel_sigma);
  kcf["output_sigma_factor"] = round_sig6(c.kcf.output_sigma_factor);
  kcf["padding"] = round_sig6(c.kcf.padding);
  kcf["learning_rate"] = round_sig6(c.kcf.learning_rate);
  kcf["cell_size"] = c.kcf.cell_size;
  kcf["feature_mode"] = to_string(c.kcf.feature_mode);
  kcf["kernel"] = to_string(c.kcf.kernel);
  kcf["subpixel"] = c.kcf.subpixel;

  nlohmann::ordered_json j;
  j["iou_threshold"] = round_sig6(c.iou_threshold);
  j["max_misses"] = c.max_misses;
  j["score_threshold"] = round_sig6(c.score_threshold);
  j["min_hits_to_count"] = c.min_hits_to_count;
  j["kcf"] = std::move(kcf);
  return j;
}

}  // namespace benthic
