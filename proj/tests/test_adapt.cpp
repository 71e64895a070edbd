#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "urlearn/adapt.hpp"
#include "urlearn/error.hpp"

using namespace urlearn;
using oracle::Mat;

TEST(Mmd, ZeroOnIdenticalSamples) {
  const Mat X = oracle::random_normal(3, 12, 1);
  EXPECT_NEAR(mmd(X, X, 1.0), 0.0, 1e-15);
}

TEST(Mmd, Symmetric) {
  const Mat X = oracle::random_normal(3, 12, 2);
  const Mat Y = oracle::random_normal(3, 7, 3, 0.5);
  EXPECT_DOUBLE_EQ(mmd(X, Y, 0.8), mmd(Y, X, 0.8));
}

TEST(Mmd, MatchesDoubleSumOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mat X = oracle::random_normal(2, 15, 10 + seed, 0.0, 0.5);
    const Mat Y = oracle::random_normal(2, 9, 30 + seed, 4.0, 0.5);
    const double bw = 0.5 + 0.2 * static_cast<double>(seed);
    EXPECT_LE(oracle::rel_err(mmd(X, Y, bw), oracle::mmd(X, Y, bw)), 1e-10);
  }
}

TEST(Mmd, RejectsMismatchedRows) {
  EXPECT_THROW(mmd(Mat::Ones(2, 3), Mat::Ones(3, 3), 1.0), StructuralError);
  EXPECT_THROW(gaussian_kernel(Mat::Ones(2, 3), Mat::Ones(2, 3), 0.0), DegeneracyError);
}

TEST(MedianBandwidth, OddAndEvenCounts) {
  Mat X(1, 3);
  X << 0.0, 1.0, 3.0;  // distances 1, 3, 2
  EXPECT_DOUBLE_EQ(median_bandwidth(X), 2.0);
  EXPECT_THROW(median_bandwidth(Mat::Ones(2, 4)), DegeneracyError);
}

namespace {

// Bandwidth rule used for the reported discrepancies, recomputed with loops.
double pooled_bandwidth(const Mat& X, const Mat& Y) {
  Mat all(X.rows(), X.cols() + Y.cols());
  all << X, Y;
  std::vector<double> d;
  for (Eigen::Index i = 0; i < all.cols(); ++i)
    for (Eigen::Index j = i + 1; j < all.cols(); ++j)
      d.push_back(std::sqrt(oracle::sq_dist(all, i, all, j)));
  return oracle::median_of(d);
}

Mat unit_cols(Mat X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) /= X.col(j).norm();
  return X;
}

}  // namespace

// Same-distribution draws: both discrepancies are sampling noise. Strict
// ordering between them flips with the draw, so only closeness is checked.
TEST(TjmAdapt, SameDistributionStaysNearZero) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Mat source = oracle::random_nonneg(4, 30, 100 + seed);
    const Mat target = oracle::random_nonneg(4, 10, 200 + seed);
    const auto r = tjm_adapt(source, target, {});
    EXPECT_LE(oracle::rel_err(r.mmd_before, oracle::mmd(source, target, pooled_bandwidth(source, target))),
              1e-10);
    const Mat zs = unit_cols(r.adapted_source);
    const Mat zt = unit_cols(r.adapted_prototypes);
    EXPECT_LE(oracle::rel_err(r.mmd_after, oracle::mmd(zs, zt, pooled_bandwidth(zs, zt))), 1e-10);

    Mat moved = target;
    moved.colwise() += Eigen::Vector4d(1.0, 0.5, 0.0, 0.8);
    const double shifted = tjm_adapt(source, moved, {}).mmd_before;
    EXPECT_LT(r.mmd_before, 0.25 * shifted) << "seed " << seed;
    EXPECT_LT(r.mmd_after, 0.25 * shifted) << "seed " << seed;
  }
}

TEST(TjmAdapt, ConstantShiftIsReduced) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Mat source = oracle::random_nonneg(4, 30, 300 + seed);
    Mat target = oracle::random_nonneg(4, 10, 400 + seed);
    target.colwise() += Eigen::Vector4d(1.0, 0.5, 0.0, 0.8);
    const auto r = tjm_adapt(source, target, {});
    EXPECT_LT(r.mmd_after, r.mmd_before) << "seed " << seed;
  }
}

TEST(TjmAdapt, TwoPointsInOneDimension) {
  TjmParams params;
  params.out_dim = 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Mat s = oracle::random_nonneg(2, 1, 700 + seed);
    const Mat t = oracle::random_nonneg(2, 1, 800 + seed, 0.0, 3.0);
    const auto r = tjm_adapt(s, t, params);
    ASSERT_EQ(r.adapted_source.rows(), 1);
    EXPECT_GT(std::abs(r.adapted_source(0, 0)), 0.0);
    EXPECT_GT(std::abs(r.adapted_prototypes(0, 0)), 0.0);
    EXPECT_LE(r.mmd_after, 1e-6) << "seed " << seed << ": " << r.adapted_source(0, 0) << " vs "
                                 << r.adapted_prototypes(0, 0);
  }
}

TEST(TjmAdapt, MapReproducesAdaptedColumns) {
  const Mat source = oracle::random_nonneg(3, 12, 5);
  const Mat protos = oracle::random_nonneg(3, 4, 6, 0.5, 1.5);
  const Mat extra = oracle::random_nonneg(3, 5, 7, 0.5, 1.5);
  const auto r = tjm_adapt(source, protos, {}, extra);
  EXPECT_EQ(r.adapted_extra.cols(), 5);
  for (Eigen::Index j = 0; j < protos.cols(); ++j)
    EXPECT_LE((r.map(protos.col(j)) - r.adapted_prototypes.col(j)).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index j = 0; j < source.cols(); ++j)
    EXPECT_LE((r.map(source.col(j)) - r.adapted_source.col(j)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(r.map(Eigen::VectorXd::Ones(4)), StructuralError);
}

TEST(TjmAdapt, DeterministicAndRoundTrips) {
  const Mat source = oracle::random_nonneg(3, 10, 8);
  const Mat protos = oracle::random_nonneg(3, 3, 9);
  const auto a = tjm_adapt(source, protos, {});
  const auto b = tjm_adapt(source, protos, {});
  EXPECT_TRUE(a.transform == b.transform);
  const auto back = AdaptationResult::from_bundle(a.to_bundle());
  EXPECT_TRUE(back.adapted_prototypes == a.adapted_prototypes);
  EXPECT_EQ(back.mmd_after, a.mmd_after);
  EXPECT_TRUE(back.map(protos.col(1)) == a.map(protos.col(1)));
}

TEST(TjmAdapt, RejectsBadArguments) {
  const Mat source = oracle::random_nonneg(3, 4, 10);
  EXPECT_THROW(tjm_adapt(source, oracle::random_nonneg(2, 2, 11), {}), StructuralError);
  TjmParams wide;
  wide.out_dim = 9;
  EXPECT_THROW(tjm_adapt(source, oracle::random_nonneg(3, 2, 12), wide), DegeneracyError);
  TjmParams none;
  none.iterations = 0;
  EXPECT_THROW(tjm_adapt(source, oracle::random_nonneg(3, 2, 12), none), StructuralError);
}
