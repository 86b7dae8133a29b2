#pragma once

#include <opencv2/core.hpp>

#include "benthic/features.hpp"
#include "benthic/geometry.hpp"
#include "benthic/kcf_params.hpp"

namespace benthic {

// Gaussian regression targets over cyclic shift distance, peak 1.0 at (0, 0).
struct LabelMap {
  cv::Mat values;  // CV_64F, rows x cols
  int rows() const { return values.rows; }
  int cols() const { return values.cols; }
};

LabelMap gaussian_labels(int rows, int cols, double sigma);

// Kernel value between `a` and every cyclic shift of `b`, as an M x N map.
// Entry (i, j) compares a with b moved by (-i, -j); equivalently a moved by
// (i, j) against b. Gaussian form:
//   exp(-max(0, |a|^2 + |b|^2 - 2 * idft(sum_c conj(A_c) .* B_c)) / (sigma^2 * M * N * C))
// Throws std::invalid_argument on shape mismatch.
cv::Mat gaussian_correlation(const FeaturePatch& a, const FeaturePatch& b, double sigma);
// Plain inner product with every shift, summed over channels, unnormalized.
cv::Mat linear_correlation(const FeaturePatch& a, const FeaturePatch& b);
// Dispatches on params.kernel.
cv::Mat kernel_correlation(const FeaturePatch& a, const FeaturePatch& b, const KcfParams& params);

// Learned filter in dual form. The spectra are never modified in place, so
// copies of a model are independent values.
struct KcfModel {
  cv::Mat alpha_hat;                  // CV_64FC2, rows x cols
  cv::Mat labels_hat;                 // CV_64FC2 spectrum of the training labels
  std::vector<cv::Mat> template_hat;  // CV_64FC2 per feature channel
  KcfParams params;
  int rows = 0;  // window size in cells
  int cols = 0;
  double target_w = 0.0;  // target size in pixels
  double target_h = 0.0;
  int window_w = 0;  // search window in pixels, a multiple of cell_size
  int window_h = 0;
  Point2 center;     // current target center in frame coordinates
  double label_sigma = 0.0;

  // Spatial-domain template, recovered channel by channel.
  FeaturePatch template_patch() const;
  bool is_finite() const;
};

struct ResponseMap {
  cv::Mat values;  // CV_64F

  struct Peak {
    int row = 0;
    int col = 0;
    double value = 0.0;
  };
  // Maximum with ties broken by the smallest row-major index.
  Peak peak() const;
};

// Closed-form dual ridge regression in the Fourier domain:
// alpha_hat = dft(labels) / (dft(k(patch, patch)) + lambda).
// Throws std::domain_error when a denominator bin is exactly zero.
KcfModel train(const FeaturePatch& patch, const LabelMap& labels, const KcfParams& params);

ResponseMap respond(const KcfModel& model, const FeaturePatch& patch);

// Signed displacement of a response peak, wrapped so offsets beyond half the
// grid become negative. Units are cells.
Point2 peak_offset(const ResponseMap& response, bool subpixel);

KcfModel tracker_init(const cv::Mat& frame, const BBox& box, const KcfParams& params);

struct TrackerUpdate {
  BBox box;
  double peak_value = 0.0;
  bool lost = false;
  KcfModel model;
};

// One tracking step: locate the target near its previous position, then
// retrain there and blend the model with the learning rate. A target whose
// window no longer touches the frame is reported lost with a zero peak and
// an unchanged model.
TrackerUpdate tracker_update(const KcfModel& model, const cv::Mat& frame);

}  // namespace benthic
