#include "benthic/fourier.hpp"

#include <stdexcept>

namespace benthic {

namespace {

long wrap(long i, long n) {
  const long r = i % n;
  return r < 0 ? r + n : r;
}

cv::Mat row_of(std::span<const double> x) {
  cv::Mat m(1, static_cast<int>(x.size()), CV_64F);
  for (std::size_t i = 0; i < x.size(); ++i) m.at<double>(0, static_cast<int>(i)) = x[i];
  return m;
}

std::vector<double> to_vector(const cv::Mat& row) {
  std::vector<double> out(static_cast<std::size_t>(row.cols));
  for (int i = 0; i < row.cols; ++i) out[static_cast<std::size_t>(i)] = row.at<double>(0, i);
  return out;
}

void require_same_length(std::span<const double> x, std::span<const double> v) {
  if (x.empty() || x.size() != v.size()) {
    throw std::invalid_argument("circulant product: lengths must match and be non-zero");
  }
}

}  // namespace

std::vector<double> cyclic_shift(std::span<const double> x, long k) {
  if (x.empty()) throw std::invalid_argument("cyclic_shift: empty vector");
  const long n = static_cast<long>(x.size());
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(wrap(i - k, n))];
  return out;
}

cv::Mat circulant(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("circulant: empty vector");
  const int n = static_cast<int>(x.size());
  cv::Mat c(n, n, CV_64F);
  for (int k = 0; k < n; ++k) {
    const auto row = cyclic_shift(x, k);
    for (int j = 0; j < n; ++j) c.at<double>(k, j) = row[static_cast<std::size_t>(j)];
  }
  return c;
}

cv::Mat cyclic_shift2d(const cv::Mat& in, int dr, int dc) {
  CV_Assert(in.type() == CV_64F);
  cv::Mat out(in.size(), CV_64F);
  for (int i = 0; i < in.rows; ++i) {
    const int si = static_cast<int>(wrap(i - dr, in.rows));
    for (int j = 0; j < in.cols; ++j) {
      out.at<double>(i, j) = in.at<double>(si, static_cast<int>(wrap(j - dc, in.cols)));
    }
  }
  return out;
}

cv::Mat dft_real(const cv::Mat& real) {
  CV_Assert(real.type() == CV_64F);
  cv::Mat spectrum;
  cv::dft(real, spectrum, cv::DFT_COMPLEX_OUTPUT);
  return spectrum;
}

cv::Mat idft_real(const cv::Mat& spectrum) {
  CV_Assert(spectrum.type() == CV_64FC2);
  cv::Mat complex_out;
  cv::dft(spectrum, complex_out, cv::DFT_INVERSE | cv::DFT_SCALE | cv::DFT_COMPLEX_OUTPUT);
  cv::Mat planes[2];
  cv::split(complex_out, planes);
  return planes[0];
}

cv::Mat spectrum_mul(const cv::Mat& a, const cv::Mat& b) {
  cv::Mat out;
  cv::mulSpectrums(a, b, out, 0, false);
  return out;
}

cv::Mat spectrum_mul_conj(const cv::Mat& a, const cv::Mat& b) {
  // mulSpectrums conjugates its second argument.
  cv::Mat out;
  cv::mulSpectrums(b, a, out, 0, true);
  return out;
}

std::vector<double> circulant_multiply(std::span<const double> x, std::span<const double> v) {
  require_same_length(x, v);
  return to_vector(idft_real(spectrum_mul_conj(dft_real(row_of(x)), dft_real(row_of(v)))));
}

std::vector<double> circulant_transpose_multiply(std::span<const double> x,
                                                 std::span<const double> v) {
  require_same_length(x, v);
  return to_vector(idft_real(spectrum_mul(dft_real(row_of(x)), dft_real(row_of(v)))));
}

}  // namespace benthic
