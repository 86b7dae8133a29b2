#include "benthic/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

namespace benthic {

namespace {

// Replicate-border crop of a CV_64F image.
cv::Mat crop_replicate(const cv::Mat& gray, int x0, int y0, int w, int h) {
  cv::Mat out(h, w, CV_64F);
  for (int r = 0; r < h; ++r) {
    const int sr = std::clamp(y0 + r, 0, gray.rows - 1);
    const double* src = gray.ptr<double>(sr);
    double* dst = out.ptr<double>(r);
    for (int c = 0; c < w; ++c) dst[c] = src[std::clamp(x0 + c, 0, gray.cols - 1)];
  }
  return out;
}

cv::Mat average_pool(const cv::Mat& img, int cell, int rows, int cols) {
  if (cell == 1) return img;
  cv::Mat out(rows, cols, CV_64F);
  const double inv = 1.0 / (cell * cell);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double sum = 0.0;
      for (int r = 0; r < cell; ++r) {
        const double* p = img.ptr<double>(i * cell + r) + j * cell;
        for (int c = 0; c < cell; ++c) sum += p[c];
      }
      out.at<double>(i, j) = sum * inv;
    }
  }
  return out;
}

}  // namespace

double FeaturePatch::squared_norm() const {
  double total = 0.0;
  for (const auto& ch : channels) total += ch.dot(ch);
  return total;
}

cv::Mat hann_window(int rows, int cols) {
  auto taper = [](int n) {
    std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    if (n > 1) {
      for (int i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
      }
    }
    return w;
  };
  const auto wr = taper(rows);
  const auto wc = taper(cols);
  cv::Mat win(rows, cols, CV_64F);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      win.at<double>(i, j) = wr[static_cast<std::size_t>(i)] * wc[static_cast<std::size_t>(j)];
    }
  }
  return win;
}

std::vector<cv::Mat> hog_cells(const cv::Mat& gray, int cell_size) {
  CV_Assert(gray.type() == CV_64F && cell_size >= 1);
  const int rows = (gray.rows - 2) / cell_size;
  const int cols = (gray.cols - 2) / cell_size;
  if (rows < 1 || cols < 1 || rows * cell_size + 2 != gray.rows ||
      cols * cell_size + 2 != gray.cols) {
    throw std::invalid_argument("hog_cells: input must be (rows*cell+2) x (cols*cell+2)");
  }

  std::vector<cv::Mat> hist(kHogBins);
  for (auto& h : hist) h = cv::Mat::zeros(rows, cols, CV_64F);

  const double bin_width = std::numbers::pi / kHogBins;
  for (int y = 0; y < rows * cell_size; ++y) {
    const double* up = gray.ptr<double>(y);
    const double* mid = gray.ptr<double>(y + 1);
    const double* down = gray.ptr<double>(y + 2);
    const int ci = y / cell_size;
    for (int x = 0; x < cols * cell_size; ++x) {
      const double gx = mid[x + 2] - mid[x];
      const double gy = down[x + 1] - up[x + 1];
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      // Linear vote between the two nearest bin centers.
      const double pos = angle / bin_width - 0.5;
      const double lo_f = std::floor(pos);
      const double frac = pos - lo_f;
      const int lo = (static_cast<int>(lo_f) + kHogBins) % kHogBins;
      const int hi = (lo + 1) % kHogBins;
      const int cj = x / cell_size;
      hist[static_cast<std::size_t>(lo)].at<double>(ci, cj) += mag * (1.0 - frac);
      hist[static_cast<std::size_t>(hi)].at<double>(ci, cj) += mag * frac;
    }
  }

  cv::Mat energy = cv::Mat::zeros(rows, cols, CV_64F);
  for (const auto& h : hist) energy += h.mul(h);

  constexpr double kEps = 1e-8;
  cv::Mat scale = cv::Mat::zeros(rows, cols, CV_64F);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double s = 0.0;
      for (int di = -1; di <= 0; ++di) {
        for (int dj = -1; dj <= 0; ++dj) {
          double block = 0.0;
          for (int bi = 0; bi < 2; ++bi) {
            for (int bj = 0; bj < 2; ++bj) {
              const int r = std::clamp(i + di + bi, 0, rows - 1);
              const int c = std::clamp(j + dj + bj, 0, cols - 1);
              block += energy.at<double>(r, c);
            }
          }
          s += 1.0 / std::sqrt(block + kEps);
        }
      }
      scale.at<double>(i, j) = 0.25 * s;
    }
  }
  for (auto& h : hist) h = h.mul(scale);
  return hist;
}

cv::Mat to_gray_unit(const cv::Mat& frame) {
  if (frame.empty()) throw std::invalid_argument("frame is empty");
  if (frame.type() == CV_64FC1) return frame;
  cv::Mat gray;
  switch (frame.type()) {
    case CV_8UC1: gray = frame; break;
    case CV_8UC3: cv::cvtColor(frame, gray, cv::COLOR_BGR2GRAY); break;
    case CV_8UC4: cv::cvtColor(frame, gray, cv::COLOR_BGRA2GRAY); break;
    default: throw std::invalid_argument("unsupported frame type");
  }
  cv::Mat out;
  gray.convertTo(out, CV_64F, 1.0 / 255.0);
  return out;
}

cv::Point window_origin(Point2 center, int window_w, int window_h) {
  return {static_cast<int>(std::floor(center.x - 0.5 * window_w + 0.5)),
          static_cast<int>(std::floor(center.y - 0.5 * window_h + 0.5))};
}

bool window_touches_frame(const cv::Mat& frame, Point2 center, int window_w, int window_h) {
  const cv::Point o = window_origin(center, window_w, window_h);
  return o.x < frame.cols && o.y < frame.rows && o.x + window_w > 0 && o.y + window_h > 0;
}

FeaturePatch extract_features(const cv::Mat& frame, Point2 center, int window_w, int window_h,
                              const KcfParams& params) {
  if (frame.empty()) throw std::invalid_argument("extract_features: empty frame");
  const int cell = params.cell_size;
  if (cell < 1 || window_w < cell || window_h < cell) {
    throw std::invalid_argument("extract_features: window smaller than one cell");
  }
  const int rows = window_h / cell;
  const int cols = window_w / cell;
  const int used_w = cols * cell;
  const int used_h = rows * cell;
  if (!window_touches_frame(frame, center, used_w, used_h)) {
    throw std::invalid_argument("extract_features: window entirely outside frame");
  }
  const cv::Mat gray = to_gray_unit(frame);
  const cv::Point o = window_origin(center, used_w, used_h);

  FeaturePatch patch;
  if (params.feature_mode == FeatureMode::kGrayscale) {
    cv::Mat pooled = average_pool(crop_replicate(gray, o.x, o.y, used_w, used_h), cell, rows, cols);
    double lo = 0.0, hi = 0.0;
    cv::minMaxLoc(pooled, &lo, &hi);
    // A flat patch carries no signal; avoid leaving rounding residue from the mean.
    patch.channels.push_back(lo == hi ? cv::Mat::zeros(rows, cols, CV_64F)
                                      : cv::Mat(pooled - cv::mean(pooled)[0]));
  } else {
    patch.channels = hog_cells(crop_replicate(gray, o.x - 1, o.y - 1, used_w + 2, used_h + 2), cell);
  }

  const cv::Mat win = hann_window(rows, cols);
  for (auto& ch : patch.channels) ch = ch.mul(win);
  return patch;
}

}  // namespace benthic
