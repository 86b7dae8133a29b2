// Command-line entry point: count, eval-ap, eval-count, synth.
//
// Exit codes: 0 success, 1 internal error, 2 input validation failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "CLI11.hpp"
#include "benthic/error.hpp"
#include "benthic/eval.hpp"
#include "benthic/ingest.hpp"
#include "benthic/parallel.hpp"
#include "benthic/pipeline.hpp"
#include "benthic/synth.hpp"

namespace fs = std::filesystem;
using namespace benthic;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

// Keys accepted both as --flags and in the config file.
const std::vector<std::pair<std::string, std::string>> kTunables = {
    {"iou-thresh", "IoU above which a detection matches a track (default 0.2)"},
    {"max-misses", "consecutive misses before a track is removed (default 10)"},
    {"score-thresh", "minimum detection score (default 0.5)"},
    {"min-hits", "matched frames a track needs to be counted (default 1)"},
    {"kcf-lambda", "ridge regularization (default 1e-4)"},
    {"kcf-kernel-sigma", "Gaussian kernel bandwidth (default 0.5)"},
    {"kcf-output-sigma-factor", "label bandwidth / target size (default 0.1)"},
    {"kcf-padding", "search window / target size (default 2.5)"},
    {"kcf-learning-rate", "model interpolation factor (default 0.02)"},
    {"kcf-cell-size", "pixels per feature cell (default 4 hog, 1 grayscale)"},
    {"kcf-feature-mode", "hog | grayscale (default hog)"},
    {"kcf-kernel", "gaussian | linear (default gaussian)"},
    {"kcf-subpixel", "parabolic peak refinement, true | false (default true)"},
};

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

long report_count(const fs::path& path) {
  const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("total_count") ||
      !j["total_count"].is_number_integer()) {
    throw InputError(path.string() + ": not a count report");
  }
  return j["total_count"].get<long>();
}

// Lines hold either "counted manual" or a single manual count that pairs
// with the next --report.
void read_manual_file(const fs::path& path, std::vector<long>& counted, std::vector<long>& manual,
                      std::vector<long>& from_reports) {
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  std::size_t next_report = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream fields(line);
    std::vector<long> values;
    long v = 0;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) {
      throw InputError(path.string() + " line " + std::to_string(line_no) + ": expected integers");
    }
    if (values.empty()) continue;
    if (values.size() == 2) {
      counted.push_back(values[0]);
      manual.push_back(values[1]);
    } else if (values.size() == 1) {
      if (next_report >= from_reports.size()) {
        throw InputError(path.string() + " line " + std::to_string(line_no) +
                         ": no --report left to pair with");
      }
      counted.push_back(from_reports[next_report++]);
      manual.push_back(values[0]);
    } else {
      throw InputError(path.string() + " line " + std::to_string(line_no) +
                       ": expected 'counted manual' or 'manual'");
    }
  }
  from_reports.erase(from_reports.begin(),
                     from_reports.begin() + static_cast<std::ptrdiff_t>(next_report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Tracking-by-detection object counting for moving-camera video");
  app.require_subcommand(1);

  // count
  auto* count = app.add_subcommand("count", "count unique objects from frames + detections");
  std::string frames_dir, detections_path, config_path, report_out;
  count->add_option("--frames", frames_dir, "directory of frame images")->required();
  count->add_option("--detections", detections_path, "DetectionFile JSON")->required();
  count->add_option("--config", config_path, "key = value config file (flags override it)");
  count->add_option("--out", report_out, "CountReport JSON output")->required();
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const auto& [key, help] : kTunables) {
    flag_options[key] = count->add_option("--" + key, flag_values[key], help);
  }

  // eval-ap
  auto* eval_ap = app.add_subcommand("eval-ap", "AP / AP50 / AP75 of predictions vs ground truth");
  std::string pred_path, gt_path, geometry_name = "mask", rule_name = "gt", ap_out;
  eval_ap->add_option("--pred", pred_path, "DetectionFile JSON")->required();
  eval_ap->add_option("--gt", gt_path, "GroundTruthFile JSON")->required();
  eval_ap->add_option("--geometry", geometry_name, "box | mask (default mask)")
      ->check(CLI::IsMember({"box", "mask"}));
  eval_ap->add_option("--iou-rule", rule_name, "gt (IoU > t, default) | ge (IoU >= t, COCO)")
      ->check(CLI::IsMember({"gt", "ge"}));
  eval_ap->add_option("--out", ap_out, "ApResult JSON output")->required();

  // eval-count
  auto* eval_count = app.add_subcommand("eval-count", "counting accuracy against manual counts");
  std::vector<std::string> report_paths;
  std::vector<long> manual_counts;
  std::string manual_file, accuracy_out;
  eval_count->add_option("--report", report_paths, "CountReport JSON (repeatable)");
  auto* manual_opt = eval_count->add_option("--manual", manual_counts, "manual count (repeatable)");
  auto* manual_file_opt =
      eval_count->add_option("--manual-file", manual_file, "lines of 'counted manual' or 'manual'");
  manual_opt->excludes(manual_file_opt);
  eval_count->add_option("--out", accuracy_out, "optional JSON output");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  std::string spec_path, synth_out;
  synth_cmd->add_option("--spec", spec_path, "scene spec JSON")->required();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    const unsigned threads = threads_from_env();
    cv::setNumThreads(static_cast<int>(resolve_threads(threads)));

    if (count->parsed()) {
      TrackerConfig config;
      if (!config_path.empty()) apply_config(config, parse_config_text(read_file(config_path)));
      std::map<std::string, std::string> overrides;
      for (const auto& [key, opt] : flag_options) {
        if (opt->count() > 0) overrides[key] = flag_values[key];
      }
      apply_config(config, overrides);
      config.validate();

      const DetectionFile detections = parse_detections(read_file(detections_path));
      const FrameSource frames = load_frames(fs::path(frames_dir));
      const CountReport report = count_objects(
          frames.size(), [&](std::size_t i) { return frames.read(i); }, detections, config, threads);

      nlohmann::ordered_json echoed = config_json(config);
      echoed["frames"] = frames_dir;
      echoed["detections"] = detections_path;
      if (!config_path.empty()) echoed["config_file"] = config_path;
      write_file(report_out, write_report(report, echoed));
      std::cout << report.total_count << "\n";
      return 0;
    }

    if (eval_ap->parsed()) {
      const DetectionFile preds = parse_detections(read_file(pred_path));
      const GroundTruthFile gts = parse_ground_truth(read_file(gt_path));
      const GeometryKind geometry = geometry_kind_from_string(geometry_name);
      const IouRule rule = rule_name == "ge" ? IouRule::kGreaterEqual : IouRule::kGreater;
      const ApResult result = evaluate(preds, gts, geometry, rule);
      write_file(ap_out, ap_result_json(result, geometry, rule).dump() + "\n");
      std::cout << "ap50 " << round_sig6(result.ap50) << "\n"
                << "ap75 " << round_sig6(result.ap75) << "\n"
                << "ap " << round_sig6(result.ap) << "\n";
      return 0;
    }

    if (eval_count->parsed()) {
      std::vector<long> from_reports;
      for (const auto& p : report_paths) from_reports.push_back(report_count(p));
      std::vector<long> counted, manual;
      if (!manual_file.empty()) {
        read_manual_file(manual_file, counted, manual, from_reports);
        if (!from_reports.empty()) throw InputError("more --report files than manual counts");
      } else {
        if (from_reports.size() != manual_counts.size()) {
          throw InputError("need one --manual per --report");
        }
        counted = from_reports;
        manual = manual_counts;
      }
      const double accuracy = counting_accuracy(counted, manual);
      if (!accuracy_out.empty()) {
        nlohmann::ordered_json samples = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < counted.size(); ++i) {
          samples.push_back({{"counted", counted[i]},
                             {"manual", manual[i]},
                             {"accuracy", round_sig6(counting_accuracy(std::span(&counted[i], 1),
                                                                       std::span(&manual[i], 1)))}});
        }
        nlohmann::ordered_json root;
        root["schema_version"] = kSchemaVersion;
        root["samples"] = std::move(samples);
        root["accuracy"] = round_sig6(accuracy);
        write_file(accuracy_out, root.dump() + "\n");
      }
      std::cout << format_accuracy(accuracy) << "\n";
      return 0;
    }

    if (synth_cmd->parsed()) {
      const auto spec_json = nlohmann::json::parse(read_file(spec_path), nullptr, false);
      if (spec_json.is_discarded()) throw InputError(spec_path + ": malformed JSON");
      const synth::SceneSpec spec = synth::scene_spec_from_json(spec_json);
      const synth::Scene scene = synth::generate(spec);

      const fs::path out(synth_out);
      fs::create_directories(out / "frames");
      for (int t = 0; t < scene.num_frames(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "%06d.png", t);
        const fs::path file = out / "frames" / name;
        if (!cv::imwrite(file.string(), scene.frame(t))) {
          throw std::runtime_error("cannot write " + file.string());
        }
      }
      write_file(out / "truth.json", serialize_ground_truth(scene.truth));
      write_file(out / "detections.json", serialize_detections(scene.detections));
      nlohmann::ordered_json meta;
      meta["schema_version"] = kSchemaVersion;
      meta["true_count"] = scene.true_count;
      meta["spec"] = synth::scene_spec_to_json(spec);
      write_file(out / "scene.json", meta.dump() + "\n");
      std::cout << scene.true_count << "\n";
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
