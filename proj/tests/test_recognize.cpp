#include "json.hpp"

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "urlearn/error.hpp"
#include "urlearn/recognize.hpp"

using namespace urlearn;
using oracle::Mat;

namespace {

Projection first_rows(Eigen::Index d, Eigen::Index m) {
  return Projection(Mat::Identity(d, m));
}

}  // namespace

TEST(BuildGallery, SingleClassEqualsProjection) {
  const auto table = SemanticTable::normalized(oracle::random_nonneg(4, 1, 1), {"u"});
  const auto pb = first_rows(2, 4);
  const auto g = build_gallery(pb, table, {9});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.prototypes().col(0) == project(pb, Eigen::VectorXd(table.column(1))));
  EXPECT_EQ(g.labels()[0], 9);
}

TEST(BuildGallery, ColumnsFollowLabelsAndMatchPerColumnProjection) {
  const Mat raw = oracle::random_nonneg(5, 3, 2);
  const auto table = SemanticTable::normalized(raw, {"a", "b", "c"});
  const Projection pb(Mat::Identity(5, 5).topRows(3));
  const auto g = build_gallery(pb, table, {4, 5, 6});
  for (int k = 0; k < 3; ++k)
    EXPECT_TRUE(g.prototypes().col(k) == project(pb, Eigen::VectorXd(table.column(k + 1))));

  Mat permuted(5, 3);
  permuted << raw.col(2), raw.col(0), raw.col(1);
  const auto gp = build_gallery(pb, SemanticTable::normalized(permuted, {"c", "a", "b"}), {6, 4, 5});
  EXPECT_TRUE(gp.prototypes().col(0) == g.prototypes().col(2));
  EXPECT_TRUE(gp.prototypes().col(1) == g.prototypes().col(0));
  EXPECT_EQ(gp.labels(), (std::vector<int>{6, 4, 5}));
}

TEST(BuildGallery, RejectsSeenCollisionAndMismatch) {
  const auto table = SemanticTable::normalized(oracle::random_nonneg(4, 2, 3), {"a", "b"});
  const auto pb = first_rows(2, 4);
  EXPECT_THROW(build_gallery(pb, table, {3, 4}, {1, 4}), StructuralError);
  EXPECT_THROW(build_gallery(pb, table, {3}), StructuralError);
  EXPECT_THROW(PrototypeGallery(Mat::Ones(2, 2), {1, 1}), StructuralError);
}

TEST(Predict, SinglePrototypeAlwaysWins) {
  const PrototypeGallery g(Mat::Ones(2, 1), {7});
  for (std::uint64_t s = 0; s < 5; ++s)
    EXPECT_EQ(nearest_prototype(oracle::random_normal(2, 1, s).col(0), g), 7);
}

TEST(Predict, ExactPrototypeMatch) {
  const Mat protos = oracle::random_normal(3, 4, 4);
  const PrototypeGallery g(protos, {1, 2, 3, 4});
  const auto pa = Projection::identity(3);
  EmbeddingVector a{protos.col(1), 1};
  EXPECT_EQ(predict(pa, a, g), 2);
}

TEST(Predict, TiesGoToLowestLabel) {
  Mat protos(1, 2);
  protos << -1.0, 1.0;
  EXPECT_EQ(nearest_prototype(Eigen::VectorXd::Zero(1), PrototypeGallery(protos, {8, 3})), 3);
}

TEST(Predict, MatchesBruteForceScan) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mat protos = oracle::random_normal(6, 10, 500 + seed);
    std::vector<int> labels;
    for (int k = 1; k <= 10; ++k) labels.push_back(k);
    const PrototypeGallery g(protos, labels);
    const Projection pa(Mat::Identity(8, 8).topRows(6));
    const Mat points = oracle::random_normal(8, 50, 600 + seed);
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      EmbeddingVector a{points.col(i), 1};
      const Eigen::VectorXd projected = points.col(i).head(6);
      EXPECT_EQ(predict(pa, a, g), oracle::nearest_label(projected, protos, labels));
    }
  }
}

TEST(Predict, EmptyGalleryIsStructural) {
  const PrototypeGallery empty(Mat(2, 0), {});
  EXPECT_THROW(nearest_prototype(Eigen::VectorXd::Zero(2), empty), StructuralError);
}

TEST(Gallery, AdaptedGalleryMapsPoints) {
  const Mat source = oracle::random_nonneg(3, 10, 7);
  const Mat protos = oracle::random_nonneg(3, 3, 8);
  const PrototypeGallery g(tjm_adapt(source, protos, {}), {5, 6, 7});
  EXPECT_TRUE(g.adapted());
  EXPECT_EQ(nearest_prototype(g.to_gallery_space(protos.col(1)), g), 6);
  const auto back = PrototypeGallery::from_bundle(g.to_bundle());
  EXPECT_TRUE(back.adapted());
  EXPECT_TRUE(back.prototypes() == g.prototypes());
  EXPECT_EQ(back.labels(), g.labels());
  EXPECT_TRUE(back.to_gallery_space(source.col(0)) == g.to_gallery_space(source.col(0)));
}

TEST(Evaluate, AllRightAllWrong) {
  EXPECT_EQ(evaluate({1, 2, 3}, {1, 2, 3}).accuracy, 1.0);
  EXPECT_EQ(evaluate({2, 3, 1}, {1, 2, 3}).accuracy, 0.0);
}

TEST(Evaluate, HandCountedMixedCase) {
  const std::vector<int> truth{1, 1, 1, 2, 2, 2, 2, 3, 3, 3};
  const std::vector<int> pred{1, 2, 1, 2, 2, 3, 2, 3, 1, 3};
  // Correct at positions 0, 2, 3, 4, 6, 7, 9.
  const auto r = evaluate(pred, truth);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.7);
  ASSERT_EQ(r.per_class.size(), 3u);
  EXPECT_EQ(r.per_class[1].support, 4);
  EXPECT_DOUBLE_EQ(r.per_class[1].accuracy, 0.75);
  EXPECT_EQ(r.confusion(0, 1), 1);
  EXPECT_EQ(r.confusion(2, 0), 1);
  EXPECT_EQ(r.confusion.sum(), 10);
}

TEST(Evaluate, RejectsEmptyAndMismatched) {
  EXPECT_THROW(evaluate({}, {}), StructuralError);
  EXPECT_THROW(evaluate({1}, {1, 2}), StructuralError);
}

TEST(Evaluate, JsonFields) {
  auto r = evaluate({1, 2, 2}, {1, 2, 1});
  r.split = "seen 1..2";
  r.seed = 4;
  r.hyperparams = {{"eta", "1"}};
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_NEAR(j["accuracy"].get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(j["per_class"]["1"]["support"], 2);
  EXPECT_EQ(j["confusion"]["counts"][0][1], 1);
  EXPECT_EQ(j["split"], "seen 1..2");
  EXPECT_EQ(j["seed"], 4);
  EXPECT_EQ(j["hyperparams"]["eta"], "1");
}
