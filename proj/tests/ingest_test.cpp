#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>

#include "benthic/error.hpp"
#include "benthic/ingest.hpp"

using namespace benthic;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("benthic_ingest_" + std::to_string(std::random_device{}()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string error_of(const std::string& text) {
  try {
    parse_detections(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ParseDetections, MinimalFileWithEmptyFrame) {
  const DetectionFile f = parse_detections(R"({"video":"v","frames":[{"index":0,"detections":[]}]})");
  ASSERT_EQ(f.frames.size(), 1u);
  EXPECT_TRUE(f.frames[0].detections.empty());
  EXPECT_FALSE(f.fps.has_value());
}

TEST(ParseDetections, FieldsAndDefaults) {
  const DetectionFile f = parse_detections(R"({
    "schema_version": 1, "video": "dive_03", "fps": 59.94, "extra": true,
    "frames": [
      {"index": 2, "detections": [
        {"bbox": [10, 20, 30, 40], "score": 0.9},
        {"bbox": [1.5, 2.5, 3, 4], "score": 1, "polygon": [[1.5,2.5],[4.5,2.5],[4.5,6.5]], "cls": 3}
      ]},
      {"index": 5}
    ]})");
  EXPECT_EQ(f.video, "dive_03");
  EXPECT_DOUBLE_EQ(*f.fps, 59.94);
  ASSERT_EQ(f.frames.size(), 2u);
  EXPECT_EQ(f.frames[0].index, 2);
  EXPECT_EQ(f.frames[0].detections[0].bbox, BBox(10, 20, 30, 40));
  EXPECT_FALSE(f.frames[0].detections[0].mask.has_value());
  ASSERT_TRUE(f.frames[0].detections[1].mask.has_value());
  EXPECT_EQ(f.frames[0].detections[1].mask->vertices().size(), 3u);
  EXPECT_TRUE(f.frames[1].detections.empty());
  EXPECT_EQ(f.find(5), &f.frames[1]);
  EXPECT_EQ(f.find(3), nullptr);
}

TEST(ParseDetections, ScoreOutOfRangeNamesFrameAndDetection) {
  const std::string text =
      R"({"frames":[{"index":0,"detections":[]},{"index":3,"detections":[{"bbox":[0,0,1,1],"score":1.5}]}]})";
  EXPECT_EQ(error_of(text), "frame 3 detection 0: score out of range");
}

TEST(ParseDetections, Rejections) {
  EXPECT_NE(error_of("{not json"), "");
  EXPECT_NE(error_of(R"({"frames":[{"index":2},{"index":1}]})").find("frame 1"), std::string::npos);
  EXPECT_NE(error_of(R"({"frames":[{"index":1},{"index":1}]})"), "");
  EXPECT_EQ(error_of(R"({"frames":[{"index":4,"detections":[{"bbox":[0,0,1,1],"score":0.5},{"bbox":[0,0,0,1],"score":0.5}]}]})")
                .rfind("frame 4 detection 1:", 0),
            0u);
  EXPECT_NE(error_of(R"({"frames":[{"index":0,"detections":[{"bbox":[0,0,1,-1],"score":0.5}]}]})"), "");
  EXPECT_NE(error_of(R"({"frames":[{"index":0,"detections":[{"bbox":[0,0,1],"score":0.5}]}]})"), "");
  EXPECT_NE(error_of(R"({"frames":[{"index":0,"detections":[{"bbox":[0,0,1,1],"score":-0.1}]}]})"), "");
  EXPECT_NE(error_of(R"({"frames":[{"index":0,"detections":[{"bbox":[0,0,1,1]}]}]})"), "");
  EXPECT_NE(error_of(R"({"schema_version":2,"frames":[]})"), "");
  EXPECT_NE(error_of(R"({"frames":[{"index":0,"detections":[{"bbox":[0,0,1,1],"score":0.5,"polygon":[[0,0],[1,1]]}]}]})"), "");
  EXPECT_NE(error_of(R"([1,2,3])"), "");
  EXPECT_NE(error_of(R"({"video":"x"})"), "");
}

TEST(ParseDetections, RoundTripIsFixedPoint) {
  const std::string text = R"({"video":"a","fps":30,"frames":[
    {"index":0,"detections":[{"bbox":[0.1,0.2,3.3333333333333335,4],"score":0.123456789}]},
    {"index":7,"detections":[{"bbox":[5,6,7,8],"score":1.0,"polygon":[[5,6],[12,6],[12,14],[5,14]]}]}]})";
  const DetectionFile once = parse_detections(text);
  const std::string s1 = serialize_detections(once);
  const DetectionFile twice = parse_detections(s1);
  EXPECT_EQ(serialize_detections(twice), s1);
  EXPECT_EQ(twice.frames[0].detections[0].bbox, once.frames[0].detections[0].bbox);
  EXPECT_EQ(twice.frames[0].detections[0].score, once.frames[0].detections[0].score);
  EXPECT_EQ(s1.back(), '\n');
  EXPECT_EQ(s1.rfind("{\"schema_version\":1", 0), 0u);
}

TEST(ParseGroundTruth, LabelsAndKeys) {
  const GroundTruthFile g = parse_ground_truth(R"({"frames":[
    {"index":0,"objects":[{"bbox":[0,0,4,4]},{"bbox":[5,5,2,2],"label":"dead_shell","polygon":[[5,5],[7,5],[7,7]]}]},
    {"index":1,"detections":[{"bbox":[1,1,1,1]}]}]})");
  ASSERT_EQ(g.frames.size(), 2u);
  EXPECT_EQ(g.frames[0].objects[0].label, "live_oyster");
  EXPECT_EQ(g.frames[0].objects[1].label, "dead_shell");
  EXPECT_EQ(g.frames[1].objects.size(), 1u);

  const GroundTruthFile again = parse_ground_truth(serialize_ground_truth(g));
  EXPECT_EQ(serialize_ground_truth(again), serialize_ground_truth(g));
  EXPECT_THROW(parse_ground_truth(R"({"frames":[{"index":0,"objects":[{"bbox":[0,0,1,1],"label":""}]}]})"),
               InputError);
}

TEST(WriteReport, EmptyReport) {
  EXPECT_EQ(write_report(CountReport{}), "{\"total_count\":0,\"tracks\":[],\"per_frame_active\":[]}\n");
}

TEST(WriteReport, FieldMappingAndDeterminism) {
  CountReport r;
  r.total_count = 1;
  r.tracks.push_back({1, 0, 9, 10});
  r.per_frame_active = std::vector<int>(10, 1);
  const std::string a = write_report(r);
  EXPECT_EQ(a, write_report(r));
  EXPECT_NE(a.find("\"hits\":10"), std::string::npos);
  EXPECT_EQ(a,
            "{\"total_count\":1,\"tracks\":[{\"id\":1,\"birth_frame\":0,\"last_frame\":9,\"hits\":10}],"
            "\"per_frame_active\":[1,1,1,1,1,1,1,1,1,1]}\n");

  nlohmann::ordered_json cfg;
  cfg["iou_threshold"] = 0.2;
  const std::string b = write_report(r, cfg);
  EXPECT_EQ(b.rfind("{\"schema_version\":1,\"total_count\":1,", 0), 0u);
  EXPECT_NE(b.find(",\"config\":{\"iou_threshold\":0.2}}\n"), std::string::npos);
}

TEST(RoundSig6, SixSignificantDigits) {
  EXPECT_EQ(round_sig6(0.123456789), 0.123457);
  EXPECT_EQ(round_sig6(123456789.0), 123457000.0);
  EXPECT_EQ(round_sig6(0.0), 0.0);
  EXPECT_EQ(round_sig6(-2.5e-7), -2.5e-7);
}

TEST(LoadFrames, SortedByName) {
  TempDir dir;
  for (const char* name : {"002.png", "000.png", "001.png"}) {
    cv::imwrite((dir.path() / name).string(), cv::Mat(8, 10, CV_8U, cv::Scalar(name[2])));
  }
  const FrameSource src = load_frames(dir.path());
  ASSERT_EQ(src.size(), 3u);
  EXPECT_EQ(src.paths()[0].filename(), "000.png");
  EXPECT_EQ(src.paths()[2].filename(), "002.png");
  EXPECT_EQ(src.width(), 10);
  EXPECT_EQ(src.height(), 8);
  EXPECT_EQ(src.read(1).at<std::uint8_t>(0, 0), '1');
}

TEST(LoadFrames, ColorFramesDecodeToGray) {
  TempDir dir;
  cv::imwrite((dir.path() / "a.png").string(), cv::Mat(4, 4, CV_8UC3, cv::Scalar(10, 20, 30)));
  const cv::Mat f = load_frames(dir.path()).read(0);
  EXPECT_EQ(f.type(), CV_8UC1);
}

TEST(LoadFrames, EmptyDirectoryFails) {
  TempDir dir;
  EXPECT_THROW(load_frames(dir.path()), InputError);
  EXPECT_THROW(load_frames(dir.path() / "missing"), InputError);
}

TEST(LoadFrames, MixedDimensionsFail) {
  TempDir dir;
  cv::imwrite((dir.path() / "000.png").string(), cv::Mat(480, 640, CV_8U, cv::Scalar(0)));
  cv::imwrite((dir.path() / "001.png").string(), cv::Mat(481, 640, CV_8U, cv::Scalar(0)));
  try {
    load_frames(dir.path());
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("001.png"), std::string::npos);
  }
}

TEST(LoadFrames, UndecodableFileNamed) {
  TempDir dir;
  write_file(dir.path() / "000.png", "not an image");
  try {
    load_frames(dir.path());
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("000.png"), std::string::npos);
  }
}

TEST(Files, ReadMissingFileIsInputError) {
  EXPECT_THROW(read_file("/nonexistent/path/file.json"), InputError);
}
