#pragma once

#include <span>
#include <vector>

#include <opencv2/core.hpp>

namespace benthic {

// Element i of the result is x[(i - k) mod n]; k = 1 moves the last element
// to the front.
std::vector<double> cyclic_shift(std::span<const double> x, long k);

// Dense circulant matrix: row k is cyclic_shift(x, k). Returned row-major,
// n x n, CV_64F.
cv::Mat circulant(std::span<const double> x);

// Two-dimensional cyclic shift of a single-channel matrix:
// out(i, j) = in((i - dr) mod rows, (j - dc) mod cols).
cv::Mat cyclic_shift2d(const cv::Mat& in, int dr, int dc);

// Full complex spectrum (CV_64FC2) of a real CV_64F matrix.
cv::Mat dft_real(const cv::Mat& real);
// Real part of the scaled inverse transform of a CV_64FC2 spectrum.
cv::Mat idft_real(const cv::Mat& spectrum);

// Elementwise a * b and conj(a) * b on CV_64FC2 spectra.
cv::Mat spectrum_mul(const cv::Mat& a, const cv::Mat& b);
cv::Mat spectrum_mul_conj(const cv::Mat& a, const cv::Mat& b);

// circulant(x) * v via the transform: idft(conj(dft(x)) .* dft(v)).
std::vector<double> circulant_multiply(std::span<const double> x, std::span<const double> v);
// circulant(x)^T * v, which is the circular convolution idft(dft(x) .* dft(v)).
std::vector<double> circulant_transpose_multiply(std::span<const double> x,
                                                 std::span<const double> v);

}  // namespace benthic
