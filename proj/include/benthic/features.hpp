#pragma once

#include <vector>

#include <opencv2/core.hpp>

#include "benthic/geometry.hpp"
#include "benthic/kcf_params.hpp"

namespace benthic {

// M x N x C real feature block. Every channel is a CV_64F matrix of the same
// shape. Channels share storage on copy (cv::Mat semantics); operations in
// this library never write into a patch after it is built.
struct FeaturePatch {
  std::vector<cv::Mat> channels;

  int rows() const { return channels.empty() ? 0 : channels.front().rows; }
  int cols() const { return channels.empty() ? 0 : channels.front().cols; }
  int num_channels() const { return static_cast<int>(channels.size()); }
  bool same_shape(const FeaturePatch& other) const {
    return rows() == other.rows() && cols() == other.cols() &&
           num_channels() == other.num_channels();
  }
  double squared_norm() const;

  static FeaturePatch single(cv::Mat channel) { return FeaturePatch{{std::move(channel)}}; }
};

// 2-D Hann window, rows x cols, zero on the border when the side exceeds 1.
cv::Mat hann_window(int rows, int cols);

// Number of orientation bins in the HOG feature mode.
inline constexpr int kHogBins = 9;

// Unsigned-orientation cell histograms (kHogBins channels) with L2
// normalization over the four 2x2 cell blocks touching each cell, averaged.
// `gray` is CV_64F and must be (rows*cell + 2) x (cols*cell + 2): a one pixel
// margin around the cell grid feeds the central-difference gradients.
std::vector<cv::Mat> hog_cells(const cv::Mat& gray, int cell_size);

// Grayscale CV_64F view of an 8-bit frame, intensities in [0, 1]. A frame that
// is already single-channel CV_64F is returned as is.
cv::Mat to_gray_unit(const cv::Mat& frame);

// Crops a window of `window_w` x `window_h` pixels centered on `center`,
// replicating edge pixels outside the frame, converts it to features and
// applies the Hann window. Grid is floor(window_h / cell) x floor(window_w / cell).
// Throws std::invalid_argument when the window lies entirely outside the frame.
FeaturePatch extract_features(const cv::Mat& frame, Point2 center, int window_w, int window_h,
                              const KcfParams& params);

// Integer top-left corner of the window centered on `center`; the patch's
// effective center is origin + (window_w, window_h) / 2.
cv::Point window_origin(Point2 center, int window_w, int window_h);

// True when the window overlaps the frame in at least one pixel.
bool window_touches_frame(const cv::Mat& frame, Point2 center, int window_w, int window_h);

}  // namespace benthic
