#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace hsi;

namespace {

ClassProbabilityMap random_simplex_map(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(1.0, 1.0);
  ClassProbabilityMap P(rows, cols);
  for (std::size_t p = 0; p < P.pixels(); ++p) {
    double s = 0.0;
    for (auto& v : P.row(p)) s += (v = g(rng));
    for (auto& v : P.row(p)) v /= s;
  }
  return P;
}

GuidanceImage random_guidance(std::size_t rows, std::size_t cols, std::uint64_t seed, int levels = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = levels > 0 ? std::floor(u(rng) * levels) / levels : u(rng);
  return {rows, cols, std::move(v), false};
}

}  // namespace

TEST(KdTree, MatchesBruteForceIncludingTies) {
  const auto g = random_guidance(16, 16, 1, 4);  // heavy ties
  for (double lambda : {0.0, 0.5, 1.0, 10.0}) {
    const auto f = build_features(g, lambda);
    const KdTree3 tree(f, 4);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto expect = oracle::brute_neighbors(f, i, 30);
      const auto got = tree.knn(f[i], 29, i);
      ASSERT_EQ(got.size(), 29u);
      for (std::size_t k = 0; k < 29; ++k) EXPECT_EQ(got[k].index, expect[k + 1]) << i << " " << k;
    }
  }
}

TEST(KdTree, WithoutSkipReturnsSelfFirst) {
  const auto f = build_features(random_guidance(8, 8, 2), 1.0);
  const KdTree3 tree(f);
  const auto nn = tree.knn(f[10], 3);
  EXPECT_EQ(nn[0].index, 10u);
  EXPECT_EQ(nn[0].dist2, 0.0);
  EXPECT_TRUE(tree.knn(f[0], 0).empty());
  EXPECT_EQ(tree.knn(f[0], 500).size(), 64u);
}

TEST(Features, CoordinatesScaledByLambda) {
  GuidanceImage g{3, 5, std::vector<double>(15, 0.25), false};
  const auto f = build_features(g, 2.0);
  EXPECT_EQ(f[2 * 5 + 4], (Point3{0.25, 2.0, 2.0}));
  EXPECT_EQ(f[1 * 5 + 2], (Point3{0.25, 1.0, 1.0}));
  EXPECT_THROW(build_features(g, -1.0), ConfigError);
}

TEST(KnnFilter, MatchesBruteForceMean) {
  const auto P = random_simplex_map(16, 16, 3);
  const auto g = random_guidance(16, 16, 4, 8);
  for (int K : {1, 5, 40})
    for (double lambda : {0.0, 1.0, 3.0}) EXPECT_EQ(knn_filter(P, g, {K, lambda}), oracle::brute_filter(P, g, {K, lambda}));
}

TEST(KnnFilter, PreservesSimplex) {
  const auto P = random_simplex_map(20, 20, 5);
  const auto out = knn_filter(P, random_guidance(20, 20, 6), {40, 1.0});
  for (std::size_t p = 0; p < out.pixels(); ++p) {
    double s = 0.0;
    for (double v : out.row(p)) {
      EXPECT_GE(v, -1e-12);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(KnnFilter, UniformMapIsFixedPoint) {
  ClassProbabilityMap P(12, 12);
  for (std::size_t p = 0; p < P.pixels(); ++p) {
    P.row(p)[0] = 0.1;
    P.row(p)[1] = 0.2;
    P.row(p)[2] = 0.3;
    P.row(p)[3] = 0.4;
  }
  EXPECT_EQ(knn_filter(P, random_guidance(12, 12, 7), {40, 1.0}), P);
}

TEST(KnnFilter, KOneIsIdentity) {
  const auto P = random_simplex_map(10, 10, 8);
  EXPECT_EQ(knn_filter(P, random_guidance(10, 10, 9), {1, 1.0}), P);
}

TEST(KnnFilter, LambdaZeroIsPermutationInvariant) {
  const std::size_t R = 9, C = 11, n = R * C;
  const auto P = random_simplex_map(R, C, 10);
  const auto g = random_guidance(R, C, 11);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t(0));
  std::mt19937_64 rng(12);
  std::shuffle(perm.begin(), perm.end(), rng);

  ClassProbabilityMap Pp(R, C);
  GuidanceImage gp{R, C, std::vector<double>(n), false};
  for (std::size_t p = 0; p < n; ++p) {
    gp.values[perm[p]] = g.values[p];
    std::copy(P.row(p).begin(), P.row(p).end(), Pp.row(perm[p]).begin());
  }
  const auto out = knn_filter(P, g, {7, 0.0});
  const auto outp = knn_filter(Pp, gp, {7, 0.0});
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out.row(p)[c], outp.row(perm[p])[c]);
}

TEST(KnnFilter, RejectsBadParameters) {
  const auto P = random_simplex_map(4, 4, 1);
  const auto g = random_guidance(4, 4, 1);
  EXPECT_THROW(knn_filter(P, g, {0, 1.0}), ConfigError);
  EXPECT_THROW(knn_filter(P, g, {17, 1.0}), ConfigError);
  EXPECT_THROW(knn_filter(P, random_guidance(4, 5, 1), {3, 1.0}), DataError);
}

TEST(ArgmaxMap, TiesGoToLowestClassCode) {
  ClassProbabilityMap P(1, 2);
  P.prob = {0.25, 0.25, 0.25, 0.25, 0.1, 0.4, 0.4, 0.1};
  const auto m = argmax_map(P);
  EXPECT_EQ(m[0], ClassCode::Normal);
  EXPECT_EQ(m[1], ClassCode::Tumor);
}

TEST(Smoothness, UniformMapIsOne) {
  EXPECT_EQ(label_smoothness(LabelMap(4, 4, ClassCode::Tumor)), 1.0);
  LabelMap checker(2, 2);
  checker.codes = {ClassCode::Normal, ClassCode::Tumor, ClassCode::Tumor, ClassCode::Normal};
  EXPECT_DOUBLE_EQ(label_smoothness(checker), 1.0 / 3.0);
}

TEST(Sweep, GridOrderAndSmoothingTrend) {
  const auto P = random_simplex_map(16, 16, 13);
  const auto g = random_guidance(16, 16, 14);
  const auto cells = param_sweep(P, g, {1, 20}, {0.0, 1.0});
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].params.K, 1);
  EXPECT_EQ(cells[1].params.lambda, 1.0);
  EXPECT_EQ(cells[2].params.K, 20);
  EXPECT_EQ(cells[0].filtered, P);
  EXPECT_GT(cells[3].smoothness, cells[1].smoothness);
}
