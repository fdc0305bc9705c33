#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace hsi;

namespace {

CalibrationRefs flat_refs(std::size_t cols, const std::vector<double>& wl, float white, float dark) {
  return {HSCube(1, cols, wl, std::vector<float>(cols * wl.size(), white)),
          HSCube(1, cols, wl, std::vector<float>(cols * wl.size(), dark))};
}

}  // namespace

TEST(Calibrate, EndpointsAreExact) {
  const auto wl = testing_support::wavelengths(3);
  std::vector<float> d{10, 90, 50, 10, 90, 50, 10, 90, 50};
  const HSCube raw(1, 3, wl, d);
  const auto cal = calibrate(raw, flat_refs(3, wl, 90.0f, 10.0f));
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_EQ(cal.at(0, 0, b), 0.0f);
    EXPECT_EQ(cal.at(0, 1, b), 1.0f);
    EXPECT_EQ(cal.at(0, 2, b), 0.5f);
  }
}

TEST(Calibrate, UsesPerColumnReferenceMeans) {
  const std::vector<double> wl{500.0};
  // Two reference rows averaging to white 4 / dark 2 in col 0 and 8 / 0 in col 1.
  const CalibrationRefs refs{HSCube(2, 2, wl, {3, 6, 5, 10}), HSCube(2, 2, wl, {1, 0, 3, 0})};
  const auto cal = calibrate(HSCube(1, 2, wl, {3, 2}), refs);
  EXPECT_FLOAT_EQ(cal.at(0, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(cal.at(0, 1, 0), 0.25f);
}

TEST(Calibrate, ClampsAndRejectsDegenerateReferences) {
  const std::vector<double> wl{500.0};
  const auto cal = calibrate(HSCube(1, 2, wl, {-5, 100}), flat_refs(2, wl, 2.0f, 1.0f));
  EXPECT_EQ(cal.at(0, 0, 0), 0.0f);
  EXPECT_EQ(cal.at(0, 1, 0), 2.0f);
  EXPECT_THROW(calibrate(HSCube(1, 2, wl, {1, 1}), flat_refs(2, wl, 1.0f, 1.0f)), NumericError);
  EXPECT_THROW(calibrate(HSCube(1, 3, wl, {1, 1, 1}), flat_refs(2, wl, 2.0f, 1.0f)), DataError);
}

TEST(Noise, RecoversInjectedVarianceOnRankOneData) {
  // Monte-Carlo oracle: the injected noise variance is known.
  const double sigma = 0.05;
  const std::size_t bands = 20;
  std::vector<double> mean(bands, 0.0);
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const auto est = estimate_noise(testing_support::rank_one_cube(64, 64, bands, sigma, 100 + s));
    for (std::size_t b = 0; b < bands; ++b) mean[b] += est.variance[b] / seeds;
  }
  for (std::size_t b = 0; b < bands; ++b) EXPECT_NEAR(mean[b], sigma * sigma, 0.15 * sigma * sigma) << "band " << b;
}

TEST(Noise, ResidualIsOrthogonalToRegressors) {
  const auto cube = testing_support::rank_one_cube(32, 32, 12, 0.05, 7);
  const auto est = estimate_noise(cube);
  Eigen::MatrixXd X = cube.pixel_matrix();
  X.rowwise() -= X.colwise().mean();
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const auto r = est.residual.col(i);
    EXPECT_LT(std::abs(r.sum()), 1e-6 * std::sqrt(double(X.rows())) * r.norm());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j == i) continue;
      EXPECT_LT(std::abs(r.dot(X.col(j))) / (r.norm() * X.col(j).norm()), 1e-6);
    }
  }
}

TEST(Noise, MatchesDirectPerBandLeastSquares) {
  // Independent oracle: solve each band's regression with QR.
  const auto cube = testing_support::random_cube(10, 10, 5, 11);
  const auto est = estimate_noise(cube);
  const Eigen::MatrixXd X = cube.pixel_matrix();
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    Eigen::MatrixXd A(X.rows(), X.cols());
    A.col(0).setOnes();
    Eigen::Index k = 1;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (j != i) A.col(k++) = X.col(j);
    const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(X.col(i));
    const Eigen::VectorXd r = X.col(i) - A * beta;
    EXPECT_LT((r - est.residual.col(i)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Noise, RejectsTooFewPixels) {
  EXPECT_THROW(estimate_noise(testing_support::random_cube(2, 2, 5, 1)), NumericError);
}

TEST(Denoise, SubtractsResidual) {
  const auto cube = testing_support::random_cube(6, 6, 4, 2);
  const auto est = estimate_noise(cube);
  const auto den = denoise(cube, est);
  for (std::size_t p = 0; p < cube.pixels(); ++p)
    for (std::size_t b = 0; b < 4; ++b)
      EXPECT_FLOAT_EQ(den.at(p, b), float(double(cube.at(p, b)) - est.residual(Eigen::Index(p), Eigen::Index(b))));
}

TEST(Crop, KeepsInclusiveRange) {
  const auto cube = testing_support::random_cube(2, 2, 826, 3);
  const auto c = crop_bands(cube, 51, 749);
  EXPECT_EQ(c.bands(), 699u);
  EXPECT_EQ(c.wavelengths().front(), cube.wavelengths()[51]);
  EXPECT_EQ(c.wavelengths().back(), cube.wavelengths()[749]);
  EXPECT_EQ(c.at(3, 0), cube.at(3, 51));
  EXPECT_THROW(crop_bands(cube, 10, 826), ConfigError);
}

TEST(Average, GroupBoundsCoverEveryBandOnce) {
  const auto bounds = band_group_bounds(699, 129);
  ASSERT_EQ(bounds.size(), 130u);
  EXPECT_EQ(bounds.front(), 0u);
  EXPECT_EQ(bounds.back(), 699u);
  for (std::size_t k = 0; k < 129; ++k) {
    const auto size = bounds[k + 1] - bounds[k];
    EXPECT_TRUE(size == 5 || size == 6) << k;
  }
}

TEST(Average, MeansGroups) {
  std::vector<float> d{1, 2, 3, 4, 5, 6, 7};
  const HSCube c(1, 1, {1, 2, 3, 4, 5, 6, 7}, d);
  const auto a = average_bands(c, 3);  // groups [0,2) [2,4) [4,7)
  ASSERT_EQ(a.bands(), 3u);
  EXPECT_FLOAT_EQ(a.at(0, 0), 1.5f);
  EXPECT_FLOAT_EQ(a.at(0, 1), 3.5f);
  EXPECT_FLOAT_EQ(a.at(0, 2), 6.0f);
  EXPECT_DOUBLE_EQ(a.wavelengths()[2], 6.0);
}

TEST(Normalize, MinMaxPerPixel) {
  // Band-sequential: pixel 0 is (2, 4, 6), pixel 1 is constant.
  const HSCube c(1, 2, {1, 2, 3}, {2, 5, 4, 5, 6, 5});
  const auto n = normalize_pixels(c);
  EXPECT_EQ(n.degenerate_pixels, 1u);
  EXPECT_EQ(n.cube.at(0, 0), 0.0f);
  EXPECT_EQ(n.cube.at(0, 1), 0.5f);
  EXPECT_EQ(n.cube.at(0, 2), 1.0f);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(n.cube.at(1, b), 0.0f);
}

TEST(Chain, ProducesExpectedBandCounts) {
  // The noise regression needs at least as many pixels as bands.
  const auto ph = generate_phantom(PhantomSpec::standard(32, 32, 826, 0.01, 1));
  const PreprocessConfig cfg;
  const auto common = preprocess_common(ph.raw, ph.refs, cfg);
  EXPECT_EQ(common.bands(), 699u);
  const auto out = preprocess_chain(ph.raw, ph.refs, cfg);
  EXPECT_EQ(out.bands(), 129u);
  for (float v : out.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Chain, ErrorsNameTheFailingStage) {
  const auto ph = generate_phantom(PhantomSpec::standard(8, 8, 40, 0.01, 1));
  PreprocessConfig cfg;  // crop range exceeds 40 bands
  try {
    preprocess_chain(ph.raw, ph.refs, cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("preprocess/config"), std::string::npos);
  }
}

TEST(Config, JsonRoundTrip) {
  PreprocessConfig c;
  c.crop_lo = 3;
  c.target_bands = 7;
  const auto back = preprocess_config_from_json(to_json(c));
  EXPECT_EQ(back.crop_lo, 3u);
  EXPECT_EQ(back.target_bands, 7u);
  EXPECT_THROW(preprocess_config_from_json({{"crop_lo", "x"}}), ConfigError);
}
