#pragma once

// Generalised multiple-instance encoding: per-class k-means bags and the
// pooled local-NBNN odds-ratio embedding of a variable-length video into a
// fixed C*H vector.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "urlearn/bundle.hpp"
#include "urlearn/features.hpp"

namespace urlearn {

struct Bag {
  int label = 0;             // 1-based class id
  Eigen::VectorXd centroid;  // mean of members
  Eigen::MatrixXd members;   // D_feat x n, n >= 1
};

/// C x H bags, stored class-major: bag (c, h) lives at index (c-1)*H + h.
class BagModel {
 public:
  BagModel(std::vector<Bag> bags, int num_classes, int bags_per_class, int k_nn, double sigma);

  const std::vector<Bag>& bags() const noexcept { return bags_; }
  int num_classes() const noexcept { return num_classes_; }
  int bags_per_class() const noexcept { return bags_per_class_; }
  int k_nn() const noexcept { return k_nn_; }
  /// Bandwidth turning squared distances into log-odds.
  double sigma() const noexcept { return sigma_; }
  Eigen::Index feature_dim() const noexcept { return members_.rows(); }
  /// M_1 = C * H.
  Eigen::Index embedding_dim() const noexcept { return static_cast<Eigen::Index>(bags_.size()); }

  /// All members side by side, with the owning bag index of each column.
  const Eigen::MatrixXd& all_members() const noexcept { return members_; }
  const std::vector<int>& member_bag() const noexcept { return member_bag_; }

  MatrixBundle to_bundle() const;
  static BagModel from_bundle(const MatrixBundle& bundle);

 private:
  std::vector<Bag> bags_;
  int num_classes_ = 0;
  int bags_per_class_ = 0;
  int k_nn_ = 0;
  double sigma_ = 0.0;
  Eigen::MatrixXd members_;
  std::vector<int> member_bag_;
};

struct EmbeddingVector {
  Eigen::VectorXd values;  // length C*H, entries >= 0
  Eigen::Index source_length = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;     // D x k
  std::vector<int> assignment;   // per point, in [0, k)
  int iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations until the relative centroid
/// shift drops below 1e-6 or 100 iterations. Returns fewer than `k` clusters
/// when the points have fewer than `k` distinct values.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

/// Clusters each class's pooled frames into H bags. A class with fewer than
/// H distinct frames gets its largest bag duplicated until H bags exist.
BagModel build_bags(const FeatureBagCorpus& corpus, int bags_per_class, int k_nn,
                    std::uint64_t seed);

/// Pooled local-NBNN odds-ratio embedding. For each frame the k_nn nearest
/// members are retrieved, the (k_nn+1)-th distance serves as background and
/// each bag scores max(0, (d_bg^2 - d_b^2) / (2 sigma^2)); scores are averaged
/// over frames.
EmbeddingVector embed_video(const BagModel& model, const Eigen::MatrixXd& frames);

/// k(x, x') = phi(x)^T phi(x').
double kernel(const EmbeddingVector& x, const EmbeddingVector& y);

/// A = [phi(x_1), ..., phi(x_N)] in corpus order.
Eigen::MatrixXd embed_corpus(const BagModel& model, const FeatureBagCorpus& corpus);

}  // namespace urlearn
