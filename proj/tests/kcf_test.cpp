#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include "benthic/features.hpp"
#include "benthic/fourier.hpp"
#include "benthic/kcf.hpp"
#include "oracles.hpp"

using namespace benthic;

namespace {

KcfParams grayscale_params() { return KcfParams::defaults(FeatureMode::kGrayscale); }

double max_abs_diff(const cv::Mat& a, const cv::Mat& b) { return cv::norm(a, b, cv::NORM_INF); }

bool bitwise_equal(const cv::Mat& a, const cv::Mat& b) {
  if (a.size() != b.size() || a.type() != b.type()) return false;
  const cv::Mat ac = a.isContinuous() ? a : a.clone();
  const cv::Mat bc = b.isContinuous() ? b : b.clone();
  return std::memcmp(ac.data, bc.data, ac.total() * ac.elemSize()) == 0;
}

// Textured 8-bit image: smooth random blobs, deterministic for a seed.
cv::Mat textured_frame(int w, int h, std::uint64_t seed) {
  cv::Mat coarse(h / 8 + 2, w / 8 + 2, CV_64F);
  cv::RNG rng(seed);
  rng.fill(coarse, cv::RNG::UNIFORM, 20.0, 235.0);
  cv::Mat up;
  cv::resize(coarse, up, cv::Size(w, h), 0, 0, cv::INTER_CUBIC);
  cv::Mat out;
  up.convertTo(out, CV_8U);
  return out;
}

}  // namespace

TEST(KcfParams, ValidateBounds) {
  KcfParams p;
  EXPECT_NO_THROW(p.validate());
  p.lambda = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = KcfParams{};
  p.learning_rate = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = KcfParams{};
  p.padding = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = KcfParams{};
  p.cell_size = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_EQ(KcfParams::defaults(FeatureMode::kGrayscale).cell_size, 1);
  EXPECT_EQ(KcfParams::defaults(FeatureMode::kHog).cell_size, 4);
}

TEST(GaussianLabels, PeakSymmetryAndValue) {
  const LabelMap y = gaussian_labels(8, 8, 1.3);
  EXPECT_EQ(y.values.at<double>(0, 0), 1.0);
  EXPECT_EQ(y.values.at<double>(1, 0), y.values.at<double>(7, 0));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      EXPECT_EQ(y.values.at<double>(i, j), y.values.at<double>((8 - i) % 8, (8 - j) % 8));

  const LabelMap y4 = gaussian_labels(4, 4, 1.0);
  EXPECT_NEAR(y4.values.at<double>(2, 0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(y4.values.at<double>(2, 0), 0.13534, 5e-6);
}

TEST(GaussianLabels, DecayWithCyclicDistance) {
  const LabelMap y = gaussian_labels(9, 12, 2.0);
  for (int i = 0; i + 1 <= 9 / 2; ++i)
    EXPECT_GT(y.values.at<double>(i, 0), y.values.at<double>(i + 1, 0));
  for (int j = 0; j + 1 <= 12 / 2; ++j)
    EXPECT_GT(y.values.at<double>(0, j), y.values.at<double>(0, j + 1));
}

TEST(GaussianLabels, UniquePeak) {
  for (int m = 2; m <= 16; ++m) {
    for (int n = 2; n <= 16; n += 3) {
      const double sigma = 0.9 * std::min(m, n) / 4.0;
      const LabelMap y = gaussian_labels(m, n, sigma);
      EXPECT_EQ(cv::countNonZero(y.values == 1.0), 1) << m << "x" << n;
    }
  }
}

TEST(Features, GridDimensionsFromWindow) {
  const cv::Mat frame = textured_frame(200, 200, 1);
  KcfParams p;  // hog, cell 4
  const FeaturePatch f = extract_features(to_gray_unit(frame), {100, 100}, 64, 48, p);
  EXPECT_EQ(f.rows(), 12);
  EXPECT_EQ(f.cols(), 16);
  EXPECT_EQ(f.num_channels(), kHogBins);
}

TEST(Features, ConstantFrameGivesZeroGrayscalePatch) {
  const cv::Mat frame(60, 80, CV_8U, cv::Scalar(137));
  const FeaturePatch f = extract_features(to_gray_unit(frame), {40, 30}, 32, 24, grayscale_params());
  ASSERT_EQ(f.num_channels(), 1);
  EXPECT_EQ(cv::countNonZero(f.channels[0] != 0.0), 0);
}

TEST(Features, HannAttenuatesBorder) {
  const cv::Mat frame = textured_frame(120, 120, 2);
  for (const auto mode : {FeatureMode::kGrayscale, FeatureMode::kHog}) {
    const FeaturePatch f = extract_features(to_gray_unit(frame), {60, 60}, 48, 48, KcfParams::defaults(mode));
    double corner = 0.0, center = 0.0;
    for (const auto& ch : f.channels) {
      corner += std::abs(ch.at<double>(0, 0));
      center += std::abs(ch.at<double>(ch.rows / 2, ch.cols / 2));
    }
    EXPECT_LT(corner, center);
  }
}

TEST(Features, WindowOutsideFrameThrows) {
  const cv::Mat frame = textured_frame(64, 64, 3);
  EXPECT_THROW(extract_features(to_gray_unit(frame), {500, 500}, 16, 16, grayscale_params()),
               std::invalid_argument);
}

TEST(KernelCorrelation, MatchesBruteForce) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    FeaturePatch a, b;
    for (int c = 0; c < 3; ++c) {
      a.channels.push_back(oracle::random_patch(rng, 8, 8));
      b.channels.push_back(oracle::random_patch(rng, 8, 8));
    }
    EXPECT_LT(max_abs_diff(gaussian_correlation(a, b, 0.7), oracle::brute_kernel(a, b, 0.7, true)), 1e-10);
    EXPECT_LT(max_abs_diff(linear_correlation(a, b), oracle::brute_kernel(a, b, 0.0, false)), 1e-10);
  }
}

TEST(KernelCorrelation, SelfPeakIsOne) {
  std::mt19937_64 rng(8);
  const FeaturePatch a = FeaturePatch::single(oracle::random_patch(rng, 8, 8));
  const cv::Mat k = gaussian_correlation(a, a, 0.5);
  const ResponseMap r{k};
  EXPECT_EQ(r.peak().row, 0);
  EXPECT_EQ(r.peak().col, 0);
  EXPECT_NEAR(r.peak().value, 1.0, 1e-12);
}

TEST(KernelCorrelation, ShiftedCopyPeaksAtShift) {
  std::mt19937_64 rng(9);
  const cv::Mat base = oracle::random_patch(rng, 8, 8);
  for (int p = 0; p < 8; p += 3) {
    for (int q = 0; q < 8; q += 2) {
      const FeaturePatch a = FeaturePatch::single(base);
      const FeaturePatch b = FeaturePatch::single(oracle::shift2d(base, p, q));
      const auto pk = ResponseMap{gaussian_correlation(a, b, 0.5)}.peak();
      EXPECT_EQ(pk.row, p);
      EXPECT_EQ(pk.col, q);
    }
  }
}

TEST(KernelCorrelation, OrthogonalPatchesGiveUniformMap) {
  // Zero-mean sinusoids at different frequencies stay orthogonal under every shift.
  const int m = 8, n = 8;
  cv::Mat a(m, n, CV_64F), b(m, n, CV_64F);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      a.at<double>(i, j) = std::cos(2 * M_PI * i / m);
      b.at<double>(i, j) = std::cos(2 * M_PI * 2 * j / n);
    }
  }
  const FeaturePatch fa = FeaturePatch::single(a), fb = FeaturePatch::single(b);
  ASSERT_NEAR(fa.squared_norm(), fb.squared_norm(), 1e-12);
  const double sigma = 0.5;
  const double expected = std::exp(-2.0 * fa.squared_norm() / (sigma * sigma * m * n));
  const cv::Mat k = gaussian_correlation(fa, fb, sigma);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) EXPECT_NEAR(k.at<double>(i, j), expected, 1e-12);
  EXPECT_LT(max_abs_diff(k, oracle::brute_kernel(fa, fb, sigma, true)), 1e-12);
}

TEST(KernelCorrelation, ShapeMismatchThrows) {
  std::mt19937_64 rng(10);
  const FeaturePatch a = FeaturePatch::single(oracle::random_patch(rng, 8, 8));
  const FeaturePatch b = FeaturePatch::single(oracle::random_patch(rng, 8, 6));
  EXPECT_THROW(gaussian_correlation(a, b, 0.5), std::invalid_argument);
}

TEST(Train, LinearKernelMatchesDenseRidge) {
  std::mt19937_64 rng(11);
  KcfParams p = grayscale_params();
  p.kernel = KernelType::kLinear;
  p.lambda = 0.5;
  for (int size : {8, 12}) {
    const cv::Mat x = oracle::random_patch(rng, size, size);
    const LabelMap y = gaussian_labels(size, size, 1.2);
    const KcfModel model = train(FeaturePatch::single(x), y, p);

    // w = sum_p alpha[p] * shift(x, -p)
    const cv::Mat alpha = idft_real(model.alpha_hat);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(size * size);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) w += alpha.at<double>(r, c) * oracle::flatten(oracle::shift2d(x, -r, -c));

    const Eigen::VectorXd w_ref = oracle::ridge_primal(x, y.values, p.lambda);
    EXPECT_LT((w - w_ref).cwiseAbs().maxCoeff(), 1e-6);

    // Responses on a new patch agree with the primal filter at every shift.
    const cv::Mat z = oracle::random_patch(rng, size, size);
    const ResponseMap r = respond(model, FeaturePatch::single(z));
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j)
        EXPECT_NEAR(r.values.at<double>(i, j), w_ref.dot(oracle::flatten(oracle::shift2d(z, -i, -j))), 1e-6);
  }
}

TEST(Train, GaussianKernelMatchesDenseDual) {
  std::mt19937_64 rng(12);
  const KcfParams p = grayscale_params();
  const cv::Mat x = oracle::random_patch(rng, 8, 8);
  const LabelMap y = gaussian_labels(8, 8, 1.0);
  const KcfModel model = train(FeaturePatch::single(x), y, p);
  const Eigen::VectorXd ref = oracle::ridge_dual_gaussian(x, y.values, p.lambda, p.kernel_sigma);
  EXPECT_LT((oracle::flatten(idft_real(model.alpha_hat)) - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Train, OwnPatchPeaksAtOrigin) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 10; ++t) {
    const FeaturePatch x = FeaturePatch::single(oracle::random_patch(rng, 16, 12));
    const KcfModel m = train(x, gaussian_labels(16, 12, 1.5), grayscale_params());
    const auto pk = respond(m, x).peak();
    EXPECT_EQ(pk.row, 0);
    EXPECT_EQ(pk.col, 0);
  }
}

TEST(Train, HugeLambdaDrivesAlphaToZero) {
  std::mt19937_64 rng(14);
  const FeaturePatch x = FeaturePatch::single(oracle::random_patch(rng, 8, 8));
  KcfParams p = grayscale_params();
  double previous = 1e300;
  for (double lambda : {1e2, 1e5, 1e8, 1e12}) {
    p.lambda = lambda;
    const double mag = cv::norm(train(x, gaussian_labels(8, 8, 1.0), p).alpha_hat, cv::NORM_INF);
    EXPECT_LT(mag, previous);
    previous = mag;
  }
  EXPECT_LT(previous, 1e-9);
}

TEST(Train, SingularSystemThrows) {
  KcfParams p = grayscale_params();
  p.kernel = KernelType::kLinear;
  p.lambda = 0.0;
  const FeaturePatch zero = FeaturePatch::single(cv::Mat::zeros(8, 8, CV_64F));
  EXPECT_THROW(train(zero, gaussian_labels(8, 8, 1.0), p), std::domain_error);
}

TEST(Train, Deterministic) {
  std::mt19937_64 rng(15);
  FeaturePatch x;
  for (int c = 0; c < 4; ++c) x.channels.push_back(oracle::random_patch(rng, 10, 14));
  const KcfParams p;
  const KcfModel a = train(x, gaussian_labels(10, 14, 1.0), p);
  const KcfModel b = train(x, gaussian_labels(10, 14, 1.0), p);
  EXPECT_TRUE(bitwise_equal(a.alpha_hat, b.alpha_hat));
  for (std::size_t c = 0; c < a.template_hat.size(); ++c)
    EXPECT_TRUE(bitwise_equal(a.template_hat[c], b.template_hat[c]));
}

TEST(Respond, ShiftEquivariance) {
  std::mt19937_64 rng(16);
  const KcfParams p = grayscale_params();
  for (int t = 0; t < 10; ++t) {
    const cv::Mat x = oracle::periodic_patch(rng, 16, 16);
    const KcfModel m = train(FeaturePatch::single(x), gaussian_labels(16, 16, 1.6), p);
    const auto base = respond(m, FeaturePatch::single(x)).peak();
    const int dp = static_cast<int>(rng() % 16), dq = static_cast<int>(rng() % 16);
    const auto moved = respond(m, FeaturePatch::single(oracle::shift2d(x, dp, dq))).peak();
    EXPECT_EQ(moved.row, (base.row + dp) % 16);
    EXPECT_EQ(moved.col, (base.col + dq) % 16);
  }
}

TEST(Respond, ShiftByTwoThree) {
  std::mt19937_64 rng(17);
  const cv::Mat x = oracle::random_patch(rng, 12, 12);
  const KcfModel m = train(FeaturePatch::single(x), gaussian_labels(12, 12, 1.2), grayscale_params());
  const auto pk = respond(m, FeaturePatch::single(oracle::shift2d(x, 2, 3))).peak();
  EXPECT_EQ(pk.row, 2);
  EXPECT_EQ(pk.col, 3);
}

TEST(Respond, ZeroPatchGivesFlatMap) {
  std::mt19937_64 rng(18);
  const KcfModel m = train(FeaturePatch::single(oracle::random_patch(rng, 8, 8)),
                           gaussian_labels(8, 8, 1.0), grayscale_params());
  const ResponseMap r = respond(m, FeaturePatch::single(cv::Mat::zeros(8, 8, CV_64F)));
  double lo, hi;
  cv::minMaxLoc(r.values, &lo, &hi);
  EXPECT_NEAR(hi - lo, 0.0, 1e-12);
}

TEST(Respond, DimensionMismatchThrows) {
  std::mt19937_64 rng(19);
  const KcfModel m = train(FeaturePatch::single(oracle::random_patch(rng, 8, 8)),
                           gaussian_labels(8, 8, 1.0), grayscale_params());
  EXPECT_THROW(respond(m, FeaturePatch::single(oracle::random_patch(rng, 8, 9))), std::invalid_argument);
}

TEST(Respond, PeakTieBreaksOnFirstIndex) {
  const ResponseMap r{cv::Mat::ones(4, 4, CV_64F)};
  EXPECT_EQ(r.peak().row, 0);
  EXPECT_EQ(r.peak().col, 0);
  cv::Mat v = cv::Mat::zeros(3, 3, CV_64F);
  v.at<double>(1, 2) = 5.0;
  v.at<double>(2, 0) = 5.0;
  EXPECT_EQ(ResponseMap{v}.peak().row, 1);
  EXPECT_EQ(ResponseMap{v}.peak().col, 2);
}

TEST(PeakOffset, WrapsToNegative) {
  cv::Mat v = cv::Mat::zeros(10, 10, CV_64F);
  v.at<double>(8, 3) = 1.0;
  const Point2 off = peak_offset(ResponseMap{v}, false);
  EXPECT_EQ(off.x, 3.0);
  EXPECT_EQ(off.y, -2.0);
}

TEST(Fuzz, NoNonFiniteValues) {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> dim(1, 12);
  std::uniform_real_distribution<double> scale_exp(-6.0, 6.0);
  const KcfParams p;
  for (int t = 0; t < 1000; ++t) {
    const int m = dim(rng), n = dim(rng), ch = 1 + static_cast<int>(rng() % 3);
    const double scale = std::pow(10.0, scale_exp(rng));
    FeaturePatch x, z;
    for (int c = 0; c < ch; ++c) {
      x.channels.push_back(oracle::random_patch(rng, m, n) * scale);
      z.channels.push_back(oracle::random_patch(rng, m, n) * scale);
    }
    const KcfModel model = train(x, gaussian_labels(m, n, 0.1 + 0.2 * std::min(m, n)), p);
    ASSERT_TRUE(model.is_finite());
    ASSERT_TRUE(cv::checkRange(respond(model, z).values));
  }
}

TEST(Tracker, InitRecordsGeometry) {
  const cv::Mat frame = textured_frame(320, 240, 21);
  KcfParams p;  // hog, cell 4, padding 2.5
  const BBox box(100, 80, 30, 22);
  const KcfModel m = tracker_init(frame, box, p);
  EXPECT_EQ(m.target_w, 30);
  EXPECT_EQ(m.target_h, 22);
  EXPECT_EQ(m.rows, static_cast<int>(std::floor(2.5 * 22 / 4)));
  EXPECT_EQ(m.cols, static_cast<int>(std::floor(2.5 * 30 / 4)));
  EXPECT_NEAR(m.label_sigma, 0.1 * std::sqrt((30.0 / 4) * (22.0 / 4)), 1e-12);
}

TEST(Tracker, InitOutsideFrameThrows) {
  const cv::Mat frame = textured_frame(100, 100, 22);
  EXPECT_THROW(tracker_init(frame, BBox(200, 200, 10, 10), KcfParams{}), std::invalid_argument);
}

TEST(Tracker, SameFrameGivesZeroOffset) {
  const cv::Mat frame = textured_frame(320, 240, 23);
  for (const auto mode : {FeatureMode::kGrayscale, FeatureMode::kHog}) {
    const KcfParams p = KcfParams::defaults(mode);
    const BBox box(120, 90, 32, 32);
    const KcfModel m = tracker_init(frame, box, p);
    const auto pk = respond(m, extract_features(to_gray_unit(frame), m.center, m.window_w, m.window_h, p)).peak();
    EXPECT_EQ(pk.row, 0);
    EXPECT_EQ(pk.col, 0);
    const TrackerUpdate u = tracker_update(m, frame);
    EXPECT_FALSE(u.lost);
    EXPECT_NEAR(u.box.x(), box.x(), 1e-9);
    EXPECT_NEAR(u.box.y(), box.y(), 1e-9);
  }
}

TEST(Tracker, StaticSceneDoesNotDrift) {
  const cv::Mat frame = textured_frame(320, 240, 24);
  const BBox box(140, 100, 36, 28);
  KcfModel m = tracker_init(frame, box, KcfParams{});
  BBox current = box;
  for (int i = 0; i < 10; ++i) {
    const TrackerUpdate u = tracker_update(m, frame);
    current = u.box;
    m = u.model;
  }
  EXPECT_LE(std::hypot(current.x() - box.x(), current.y() - box.y()), 0.5);
}

TEST(Tracker, FollowsTranslation) {
  const cv::Mat world = textured_frame(600, 300, 25);
  const KcfParams p = KcfParams::defaults(FeatureMode::kGrayscale);
  const BBox target(150, 120, 40, 40);
  cv::Rect view(0, 0, 400, 300);
  KcfModel m = tracker_init(world(view), target, p);
  for (int t = 1; t <= 40; ++t) {
    view.x = 2 * t;  // camera pans right, target moves left in view
    const TrackerUpdate u = tracker_update(m, world(view).clone());
    m = u.model;
    const double expected_x = target.x() - 2.0 * t;
    EXPECT_LE(std::hypot(u.box.x() - expected_x, u.box.y() - target.y()), 1.0) << "frame " << t;
  }
}

TEST(Tracker, ZeroLearningRateLeavesModelUnchanged) {
  const cv::Mat world = textured_frame(400, 300, 26);
  KcfParams p = KcfParams::defaults(FeatureMode::kGrayscale);
  p.learning_rate = 0.0;
  const KcfModel m = tracker_init(world(cv::Rect(0, 0, 300, 300)), BBox(100, 100, 30, 30), p);
  const TrackerUpdate u = tracker_update(m, world(cv::Rect(3, 0, 300, 300)).clone());
  EXPECT_TRUE(bitwise_equal(u.model.alpha_hat, m.alpha_hat));
  for (std::size_t c = 0; c < m.template_hat.size(); ++c)
    EXPECT_TRUE(bitwise_equal(u.model.template_hat[c], m.template_hat[c]));
}

TEST(Tracker, LeavingFrameReportsLoss) {
  const cv::Mat frame = textured_frame(200, 200, 27);
  KcfModel m = tracker_init(frame, BBox(80, 80, 20, 20), KcfParams{});
  m.center = {1000.0, 1000.0};
  const TrackerUpdate u = tracker_update(m, frame);
  EXPECT_TRUE(u.lost);
  EXPECT_EQ(u.peak_value, 0.0);
}
