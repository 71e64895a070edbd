#include "urlearn/gmil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "random.hpp"
#include "stats.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

constexpr int kMaxLloydIterations = 100;
constexpr double kLloydTolerance = 1e-6;
constexpr std::size_t kSigmaSampleSize = 2000;
constexpr double kEps = 1e-12;

int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& x, double& dist2) {
  int best = 0;
  dist2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.cols(); ++j) {
    const double d = (centroids.col(j) - x).squaredNorm();
    if (d < dist2) {
      dist2 = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& points, int k, detail::Engine& rng) {
  const Eigen::Index n = points.cols();
  std::vector<Eigen::Index> chosen;
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  chosen.push_back(first(rng));

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    d2[static_cast<std::size_t>(i)] = (points.col(i) - points.col(chosen[0])).squaredNorm();

  while (static_cast<int>(chosen.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (!(total > 0.0)) break;  // every point coincides with a chosen center
    std::uniform_real_distribution<double> u(0.0, total);
    const double target = u(rng);
    double acc = 0.0;
    Eigen::Index pick = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = d2[static_cast<std::size_t>(i)];
      if (w <= 0.0) continue;
      acc += w;
      pick = i;
      if (acc >= target) break;
    }
    chosen.push_back(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& cur = d2[static_cast<std::size_t>(i)];
      cur = std::min(cur, (points.col(i) - points.col(pick)).squaredNorm());
    }
  }

  Eigen::MatrixXd centroids(points.rows(), static_cast<Eigen::Index>(chosen.size()));
  for (std::size_t j = 0; j < chosen.size(); ++j)
    centroids.col(static_cast<Eigen::Index>(j)) = points.col(chosen[j]);
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  if (k < 1) throw StructuralError("k-means needs k >= 1");
  if (points.cols() < 1) throw StructuralError("k-means needs at least one point");

  auto rng = detail::make_engine(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  const Eigen::Index kk = result.centroids.cols();
  const Eigen::Index n = points.cols();
  result.assignment.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist2(static_cast<std::size_t>(n));

  for (int iter = 1; iter <= kMaxLloydIterations; ++iter) {
    result.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i)
      result.assignment[static_cast<std::size_t>(i)] =
          nearest_centroid(result.centroids, points.col(i), dist2[static_cast<std::size_t>(i)]);

    std::vector<int> counts(static_cast<std::size_t>(kk), 0);
    for (int a : result.assignment) ++counts[static_cast<std::size_t>(a)];
    // An emptied cluster takes over the point farthest from its own centroid.
    for (Eigen::Index j = 0; j < kk; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < dist2.size(); ++i) {
        if (counts[static_cast<std::size_t>(result.assignment[i])] > 1 && dist2[i] > far_d) {
          far_d = dist2[i];
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(result.assignment[far])];
      result.assignment[far] = static_cast<int>(j);
      dist2[far] = 0.0;
      ++counts[static_cast<std::size_t>(j)];
    }

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(points.rows(), kk);
    for (Eigen::Index i = 0; i < n; ++i) updated.col(result.assignment[static_cast<std::size_t>(i)]) += points.col(i);
    for (Eigen::Index j = 0; j < kk; ++j) updated.col(j) /= counts[static_cast<std::size_t>(j)];

    const double shift = (updated - result.centroids).norm();
    const double scale = std::max(result.centroids.norm(), kEps);
    result.centroids = std::move(updated);
    if (shift / scale < kLloydTolerance) break;
  }
  return result;
}

BagModel::BagModel(std::vector<Bag> bags, int num_classes, int bags_per_class, int k_nn,
                   double sigma)
    : bags_(std::move(bags)),
      num_classes_(num_classes),
      bags_per_class_(bags_per_class),
      k_nn_(k_nn),
      sigma_(sigma) {
  if (num_classes_ < 1 || bags_per_class_ < 1)
    throw StructuralError("bag model needs at least one class and one bag per class");
  if (k_nn_ < 1) throw StructuralError("k_nn must be >= 1");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
    throw DegeneracyError("bag model bandwidth must be positive and finite");
  if (bags_.size() != static_cast<std::size_t>(num_classes_) * static_cast<std::size_t>(bags_per_class_))
    throw StructuralError("bag model needs exactly C*H bags");

  Eigen::Index total = 0;
  const Eigen::Index dim = bags_.front().members.rows();
  for (std::size_t b = 0; b < bags_.size(); ++b) {
    const auto& bag = bags_[b];
    const int expected_label = static_cast<int>(b) / bags_per_class_ + 1;
    if (bag.label != expected_label)
      throw StructuralError("bag " + std::to_string(b) + " has label " + std::to_string(bag.label) +
                            ", expected " + std::to_string(expected_label));
    if (bag.members.cols() < 1) throw StructuralError("bag " + std::to_string(b) + " is empty");
    if (bag.members.rows() != dim || bag.centroid.size() != dim)
      throw StructuralError("bag " + std::to_string(b) + " has inconsistent dimension");
    total += bag.members.cols();
  }

  members_.resize(dim, total);
  member_bag_.reserve(static_cast<std::size_t>(total));
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < bags_.size(); ++b) {
    const auto& m = bags_[b].members;
    members_.middleCols(offset, m.cols()) = m;
    member_bag_.insert(member_bag_.end(), static_cast<std::size_t>(m.cols()), static_cast<int>(b));
    offset += m.cols();
  }
}

MatrixBundle BagModel::to_bundle() const {
  MatrixBundle bundle;
  bundle.set_meta("kind", "bag_model");
  bundle.set_scalar("num_classes", num_classes_);
  bundle.set_scalar("bags_per_class", bags_per_class_);
  bundle.set_scalar("k_nn", k_nn_);
  bundle.set_scalar("sigma", sigma_);
  Eigen::MatrixXd centroids(feature_dim(), embedding_dim());
  Eigen::MatrixXd counts(1, embedding_dim());
  for (std::size_t b = 0; b < bags_.size(); ++b) {
    centroids.col(static_cast<Eigen::Index>(b)) = bags_[b].centroid;
    counts(0, static_cast<Eigen::Index>(b)) = static_cast<double>(bags_[b].members.cols());
  }
  bundle.set_matrix("centroids", std::move(centroids));
  bundle.set_matrix("member_counts", std::move(counts));
  bundle.set_matrix("members", members_);
  return bundle;
}

BagModel BagModel::from_bundle(const MatrixBundle& bundle) {
  if (!bundle.has_meta("kind") || bundle.meta("kind") != "bag_model")
    throw StructuralError("bundle is not a bag model");
  const int num_classes = static_cast<int>(bundle.scalar("num_classes"));
  const int per_class = static_cast<int>(bundle.scalar("bags_per_class"));
  const int k_nn = static_cast<int>(bundle.scalar("k_nn"));
  const double sigma = bundle.scalar("sigma");
  const auto& centroids = bundle.matrix("centroids");
  const auto& counts = bundle.matrix("member_counts");
  const auto& members = bundle.matrix("members");
  if (counts.cols() != centroids.cols() || members.rows() != centroids.rows())
    throw StructuralError("bag model bundle has inconsistent shapes");

  std::vector<Bag> bags;
  Eigen::Index offset = 0;
  for (Eigen::Index b = 0; b < centroids.cols(); ++b) {
    const auto n = static_cast<Eigen::Index>(counts(0, b));
    if (n < 1 || offset + n > members.cols())
      throw StructuralError("bag model bundle member counts do not match members");
    bags.push_back(Bag{static_cast<int>(b) / std::max(per_class, 1) + 1, centroids.col(b),
                       members.middleCols(offset, n)});
    offset += n;
  }
  if (offset != members.cols()) throw StructuralError("bag model bundle has unused members");
  return BagModel(std::move(bags), num_classes, per_class, k_nn, sigma);
}

BagModel build_bags(const FeatureBagCorpus& corpus, int bags_per_class, int k_nn,
                    std::uint64_t seed) {
  if (bags_per_class < 1) throw StructuralError("H (bags per class) must be >= 1");
  if (k_nn < 1) throw StructuralError("k_nn must be >= 1");
  const int n_classes = corpus.num_classes();

  std::vector<Eigen::Index> frames_per_class(static_cast<std::size_t>(n_classes), 0);
  for (const auto& v : corpus.videos())
    frames_per_class[static_cast<std::size_t>(v.label - 1)] += v.frames.cols();

  std::vector<Bag> bags;
  for (int c = 1; c <= n_classes; ++c) {
    const auto n = frames_per_class[static_cast<std::size_t>(c - 1)];
    if (n == 0)
      throw StructuralError("class " + std::to_string(c) + " ('" +
                            corpus.class_names()[static_cast<std::size_t>(c - 1)] +
                            "') has no frames");
    Eigen::MatrixXd pooled(corpus.dim(), n);
    Eigen::Index offset = 0;
    for (const auto& v : corpus.videos()) {
      if (v.label != c) continue;
      pooled.middleCols(offset, v.frames.cols()) = v.frames;
      offset += v.frames.cols();
    }

    const auto km = kmeans(pooled, bags_per_class, seed + static_cast<std::uint64_t>(c));
    const auto found = km.centroids.cols();
    std::vector<Bag> class_bags(static_cast<std::size_t>(found));
    std::vector<Eigen::Index> sizes(static_cast<std::size_t>(found), 0);
    for (int a : km.assignment) ++sizes[static_cast<std::size_t>(a)];
    for (Eigen::Index j = 0; j < found; ++j) {
      auto& bag = class_bags[static_cast<std::size_t>(j)];
      bag.label = c;
      bag.members.resize(corpus.dim(), sizes[static_cast<std::size_t>(j)]);
    }
    std::vector<Eigen::Index> fill(static_cast<std::size_t>(found), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(km.assignment[static_cast<std::size_t>(i)]);
      class_bags[j].members.col(fill[j]++) = pooled.col(i);
    }
    for (auto& bag : class_bags) bag.centroid = bag.members.rowwise().mean();

    // Pad degenerate classes by duplicating the largest bag.
    if (static_cast<int>(class_bags.size()) < bags_per_class) {
      std::size_t largest = 0;
      for (std::size_t j = 1; j < class_bags.size(); ++j)
        if (class_bags[j].members.cols() > class_bags[largest].members.cols()) largest = j;
      const Bag copy = class_bags[largest];
      while (static_cast<int>(class_bags.size()) < bags_per_class) class_bags.push_back(copy);
    }
    for (auto& bag : class_bags) bags.push_back(std::move(bag));
  }

  // Bandwidth: median pairwise distance over a uniform member sample.
  Eigen::Index total = 0;
  for (const auto& bag : bags) total += bag.members.cols();
  Eigen::MatrixXd all(corpus.dim(), total);
  Eigen::Index offset = 0;
  for (const auto& bag : bags) {
    all.middleCols(offset, bag.members.cols()) = bag.members;
    offset += bag.members.cols();
  }
  std::vector<Eigen::Index> sample(static_cast<std::size_t>(total));
  std::iota(sample.begin(), sample.end(), Eigen::Index{0});
  if (sample.size() > kSigmaSampleSize) {
    auto rng = detail::make_engine(seed, 0x5167);
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(kSigmaSampleSize);
    std::sort(sample.begin(), sample.end());
  }
  std::vector<double> distances;
  distances.reserve(sample.size() * (sample.size() - 1) / 2);
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = i + 1; j < sample.size(); ++j)
      distances.push_back((all.col(sample[i]) - all.col(sample[j])).norm());
  const double sigma = detail::median(std::move(distances));
  if (!(sigma > 0.0))
    throw DegeneracyError("median pairwise member distance is 0; cannot set the NBNN bandwidth");

  return BagModel(std::move(bags), n_classes, bags_per_class, k_nn, sigma);
}

EmbeddingVector embed_video(const BagModel& model, const Eigen::MatrixXd& frames) {
  if (frames.rows() != model.feature_dim())
    throw StructuralError("frame dimension " + std::to_string(frames.rows()) +
                          " does not match bag model dimension " +
                          std::to_string(model.feature_dim()));
  if (frames.cols() < 1) throw StructuralError("video has no frames");

  const auto& members = model.all_members();
  const auto& owner = model.member_bag();
  const Eigen::Index total = members.cols();
  const Eigen::Index retrieved = std::min<Eigen::Index>(model.k_nn(), total - 1);
  const double denom = 2.0 * model.sigma() * model.sigma();

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.embedding_dim());
  std::vector<std::pair<double, Eigen::Index>> order(static_cast<std::size_t>(total));
  Eigen::VectorXd nearest(model.embedding_dim());

  for (Eigen::Index l = 0; l < frames.cols(); ++l) {
    const auto x = frames.col(l);
    for (Eigen::Index m = 0; m < total; ++m)
      order[static_cast<std::size_t>(m)] = {(members.col(m) - x).squaredNorm(), m};
    const auto cut = order.begin() + retrieved;
    std::nth_element(order.begin(), cut, order.end());
    const double background = cut->first;

    nearest.setConstant(background);
    for (auto it = order.begin(); it != cut; ++it) {
      auto& slot = nearest(owner[static_cast<std::size_t>(it->second)]);
      slot = std::min(slot, it->first);
    }
    for (Eigen::Index b = 0; b < nearest.size(); ++b)
      sum(b) += std::max(0.0, (background - nearest(b)) / denom);
  }

  return EmbeddingVector{sum / static_cast<double>(frames.cols()), frames.cols()};
}

double kernel(const EmbeddingVector& x, const EmbeddingVector& y) {
  if (x.values.size() != y.values.size())
    throw StructuralError("kernel: embedding lengths differ (" + std::to_string(x.values.size()) +
                          " vs " + std::to_string(y.values.size()) + ")");
  return x.values.dot(y.values);
}

Eigen::MatrixXd embed_corpus(const BagModel& model, const FeatureBagCorpus& corpus) {
  Eigen::MatrixXd a(model.embedding_dim(), static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i)
    a.col(static_cast<Eigen::Index>(i)) = embed_video(model, corpus.video(i).frames).values;
  return a;
}

}  // namespace urlearn
