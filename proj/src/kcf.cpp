#include "benthic/kcf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "benthic/fourier.hpp"

namespace benthic {

namespace {

std::vector<cv::Mat> channel_spectra(const FeaturePatch& patch) {
  std::vector<cv::Mat> out;
  out.reserve(patch.channels.size());
  for (const auto& ch : patch.channels) out.push_back(dft_real(ch));
  return out;
}

// Sum over channels of conj(A_c) .* B_c, transformed back to the spatial domain.
cv::Mat cross_correlation(const std::vector<cv::Mat>& a_hat, const std::vector<cv::Mat>& b_hat) {
  cv::Mat acc = cv::Mat::zeros(a_hat.front().size(), CV_64FC2);
  for (std::size_t c = 0; c < a_hat.size(); ++c) acc += spectrum_mul_conj(a_hat[c], b_hat[c]);
  return idft_real(acc);
}

// Parseval: |x|^2 = sum |X|^2 / (M * N).
double spectral_norm_sq(const std::vector<cv::Mat>& spectra) {
  double total = 0.0;
  for (const auto& s : spectra) total += s.dot(s);
  const auto& front = spectra.front();
  return total / static_cast<double>(front.rows * front.cols);
}

cv::Mat gaussian_from_cross(const cv::Mat& cross, double a_norm, double b_norm, double sigma,
                            int channels) {
  const double denom =
      sigma * sigma * static_cast<double>(cross.rows) * cross.cols * static_cast<double>(channels);
  cv::Mat k(cross.size(), CV_64F);
  for (int i = 0; i < cross.rows; ++i) {
    const double* src = cross.ptr<double>(i);
    double* dst = k.ptr<double>(i);
    for (int j = 0; j < cross.cols; ++j) {
      const double d = std::max(0.0, a_norm + b_norm - 2.0 * src[j]);
      dst[j] = std::exp(-d / denom);
    }
  }
  return k;
}

cv::Mat kernel_from_spectra(const std::vector<cv::Mat>& a_hat, double a_norm,
                            const std::vector<cv::Mat>& b_hat, double b_norm,
                            const KcfParams& params) {
  cv::Mat cross = cross_correlation(a_hat, b_hat);
  if (params.kernel == KernelType::kLinear) return cross;
  return gaussian_from_cross(cross, a_norm, b_norm, params.kernel_sigma,
                             static_cast<int>(a_hat.size()));
}

void require_same_shape(const FeaturePatch& a, const FeaturePatch& b, const char* what) {
  if (a.num_channels() == 0 || !a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": feature patch shapes differ");
  }
}

cv::Mat blend(const cv::Mat& old_value, const cv::Mat& fresh, double rate) {
  if (rate == 0.0) return old_value;
  if (rate == 1.0) return fresh;
  cv::Mat out;
  cv::addWeighted(old_value, 1.0 - rate, fresh, rate, 0.0, out);
  return out;
}

// Vertex of the parabola through (-1, left), (0, mid), (1, right).
double parabolic_offset(double left, double mid, double right) {
  const double denom = left - 2.0 * mid + right;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

int wrap_signed(int idx, int n) { return idx > n / 2 ? idx - n : idx; }

}  // namespace

LabelMap gaussian_labels(int rows, int cols, double sigma) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("gaussian_labels: empty grid");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_labels: sigma must be positive");
  LabelMap labels{cv::Mat(rows, cols, CV_64F)};
  const double scale = -0.5 / (sigma * sigma);
  for (int i = 0; i < rows; ++i) {
    const double di = std::min(i, rows - i);
    for (int j = 0; j < cols; ++j) {
      const double dj = std::min(j, cols - j);
      labels.values.at<double>(i, j) = std::exp(scale * (di * di + dj * dj));
    }
  }
  return labels;
}

cv::Mat gaussian_correlation(const FeaturePatch& a, const FeaturePatch& b, double sigma) {
  require_same_shape(a, b, "kernel_correlation");
  KcfParams p;
  p.kernel = KernelType::kGaussian;
  p.kernel_sigma = sigma;
  return kernel_correlation(a, b, p);
}

cv::Mat linear_correlation(const FeaturePatch& a, const FeaturePatch& b) {
  require_same_shape(a, b, "kernel_correlation");
  return cross_correlation(channel_spectra(a), channel_spectra(b));
}

cv::Mat kernel_correlation(const FeaturePatch& a, const FeaturePatch& b, const KcfParams& params) {
  require_same_shape(a, b, "kernel_correlation");
  return kernel_from_spectra(channel_spectra(a), a.squared_norm(), channel_spectra(b),
                             b.squared_norm(), params);
}

FeaturePatch KcfModel::template_patch() const {
  FeaturePatch patch;
  for (const auto& s : template_hat) patch.channels.push_back(idft_real(s));
  return patch;
}

bool KcfModel::is_finite() const {
  if (!cv::checkRange(alpha_hat)) return false;
  return std::all_of(template_hat.begin(), template_hat.end(),
                     [](const cv::Mat& m) { return cv::checkRange(m); });
}

ResponseMap::Peak ResponseMap::peak() const {
  Peak best{0, 0, values.at<double>(0, 0)};
  for (int i = 0; i < values.rows; ++i) {
    const double* row = values.ptr<double>(i);
    for (int j = 0; j < values.cols; ++j) {
      if (row[j] > best.value) best = {i, j, row[j]};
    }
  }
  return best;
}

KcfModel train(const FeaturePatch& patch, const LabelMap& labels, const KcfParams& params) {
  if (patch.num_channels() == 0 || patch.rows() != labels.rows() ||
      patch.cols() != labels.cols()) {
    throw std::invalid_argument("train: patch and label dimensions differ");
  }
  KcfModel model;
  model.params = params;
  model.rows = patch.rows();
  model.cols = patch.cols();
  model.template_hat = channel_spectra(patch);
  const double norm = patch.squared_norm();
  const cv::Mat k = kernel_from_spectra(model.template_hat, norm, model.template_hat, norm, params);
  const cv::Mat k_hat = dft_real(k);
  model.labels_hat = dft_real(labels.values);

  model.alpha_hat.create(k_hat.size(), CV_64FC2);
  for (int i = 0; i < k_hat.rows; ++i) {
    const auto* kr = k_hat.ptr<cv::Vec2d>(i);
    const auto* yr = model.labels_hat.ptr<cv::Vec2d>(i);
    auto* ar = model.alpha_hat.ptr<cv::Vec2d>(i);
    for (int j = 0; j < k_hat.cols; ++j) {
      // y / (k + lambda), complex division.
      const double re = kr[j][0] + params.lambda;
      const double im = kr[j][1];
      const double mag = re * re + im * im;
      if (mag == 0.0) throw std::domain_error("train: singular kernel spectrum (lambda = 0)");
      ar[j][0] = (yr[j][0] * re + yr[j][1] * im) / mag;
      ar[j][1] = (yr[j][1] * re - yr[j][0] * im) / mag;
    }
  }
  if (!model.is_finite()) throw std::domain_error("train: non-finite model");
  return model;
}

ResponseMap respond(const KcfModel& model, const FeaturePatch& patch) {
  if (patch.num_channels() != static_cast<int>(model.template_hat.size()) ||
      patch.rows() != model.rows || patch.cols() != model.cols) {
    throw std::invalid_argument("respond: patch dimensions do not match model");
  }
  const auto z_hat = channel_spectra(patch);
  const cv::Mat k = kernel_from_spectra(model.template_hat, spectral_norm_sq(model.template_hat),
                                        z_hat, patch.squared_norm(), model.params);
  return ResponseMap{idft_real(spectrum_mul(dft_real(k), model.alpha_hat))};
}

Point2 peak_offset(const ResponseMap& response, bool subpixel) {
  const auto pk = response.peak();
  const cv::Mat& v = response.values;
  double dr = wrap_signed(pk.row, v.rows);
  double dc = wrap_signed(pk.col, v.cols);
  if (subpixel) {
    if (v.rows >= 3) {
      dr += parabolic_offset(v.at<double>((pk.row + v.rows - 1) % v.rows, pk.col), pk.value,
                             v.at<double>((pk.row + 1) % v.rows, pk.col));
    }
    if (v.cols >= 3) {
      dc += parabolic_offset(v.at<double>(pk.row, (pk.col + v.cols - 1) % v.cols), pk.value,
                             v.at<double>(pk.row, (pk.col + 1) % v.cols));
    }
  }
  return {dc, dr};
}

KcfModel tracker_init(const cv::Mat& frame, const BBox& box, const KcfParams& params) {
  params.validate();
  if (frame.empty()) throw std::invalid_argument("tracker_init: empty frame");
  const BBox frame_box(0.0, 0.0, frame.cols, frame.rows);
  if (intersection_area(box, frame_box) <= 0.0) {
    throw std::invalid_argument("tracker_init: bbox does not intersect the frame");
  }
  const int cell = params.cell_size;
  const int rows = std::max(1, static_cast<int>(std::floor(params.padding * box.h() / cell)));
  const int cols = std::max(1, static_cast<int>(std::floor(params.padding * box.w() / cell)));
  const double sigma =
      params.output_sigma_factor * std::sqrt((box.w() / cell) * (box.h() / cell));

  const cv::Mat gray = to_gray_unit(frame);
  const Point2 center = box.center();
  const FeaturePatch patch = extract_features(gray, center, cols * cell, rows * cell, params);
  KcfModel model = train(patch, gaussian_labels(rows, cols, sigma), params);
  model.target_w = box.w();
  model.target_h = box.h();
  model.window_w = cols * cell;
  model.window_h = rows * cell;
  model.center = center;
  model.label_sigma = sigma;
  return model;
}

TrackerUpdate tracker_update(const KcfModel& model, const cv::Mat& frame) {
  if (frame.empty()) throw std::invalid_argument("tracker_update: empty frame");
  const BBox previous = BBox::from_center(model.center, model.target_w, model.target_h);
  if (!window_touches_frame(frame, model.center, model.window_w, model.window_h)) {
    return {previous, 0.0, true, model};
  }
  const cv::Mat gray = to_gray_unit(frame);
  const KcfParams& params = model.params;
  const int cell = params.cell_size;

  const ResponseMap response =
      respond(model, extract_features(gray, model.center, model.window_w, model.window_h, params));
  const double peak_value = response.peak().value;
  const Point2 shift = peak_offset(response, params.subpixel);
  const Point2 center{model.center.x + shift.x * cell, model.center.y + shift.y * cell};
  const BBox moved = BBox::from_center(center, model.target_w, model.target_h);

  const BBox frame_box(0.0, 0.0, frame.cols, frame.rows);
  if (intersection_area(moved, frame_box) <= 0.0 ||
      !window_touches_frame(frame, center, model.window_w, model.window_h)) {
    return {moved, 0.0, true, model};
  }

  KcfModel fresh = train(extract_features(gray, center, model.window_w, model.window_h, params),
                         gaussian_labels(model.rows, model.cols, model.label_sigma), params);
  KcfModel next = model;
  next.center = center;
  next.alpha_hat = blend(model.alpha_hat, fresh.alpha_hat, params.learning_rate);
  for (std::size_t c = 0; c < next.template_hat.size(); ++c) {
    next.template_hat[c] = blend(model.template_hat[c], fresh.template_hat[c], params.learning_rate);
  }
  if (!next.is_finite()) throw std::domain_error("tracker_update: non-finite model");
  return {moved, peak_value, false, next};
}

}  // namespace benthic
