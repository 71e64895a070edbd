#include <algorithm>
#include <cmath>
#include <random>

#include "random.hpp"
#include "urlearn/error.hpp"
#include "urlearn/features.hpp"

namespace urlearn {

namespace {

// Stream ids keep each part of the draw independent of the others' sizes.
constexpr std::uint64_t kCentroidStream = 1;
constexpr std::uint64_t kMixingStream = 2;
constexpr std::uint64_t kSemanticStream = 3;
constexpr std::uint64_t kShiftStream = 4;
constexpr std::uint64_t kVideoStream = 1000;

std::string synthetic_name(int label) { return "synth" + std::to_string(label); }

Eigen::MatrixXd draw_frames(const Eigen::MatrixXd& centroids, int n_frames, double noise,
                            detail::Engine& rng) {
  std::uniform_int_distribution<Eigen::Index> pick_bag(0, centroids.cols() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd frames(centroids.rows(), n_frames);
  for (int l = 0; l < n_frames; ++l) {
    const auto h = pick_bag(rng);
    for (Eigen::Index d = 0; d < centroids.rows(); ++d) {
      const double x = centroids(d, h) + noise * gauss(rng);
      frames(d, l) = std::max(0.0, x);
    }
  }
  return frames;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("synthetic spec: ") + what);
  };
  require(seen_classes >= 1, "seen_classes must be >= 1");
  require(unseen_classes >= 1, "unseen_classes must be >= 1");
  require(latent_bags >= 1, "latent_bags must be >= 1");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  require(semantic_dim >= 1, "semantic_dim must be >= 1");
  require(min_frames >= 1, "min_frames must be >= 1");
  require(max_frames >= min_frames, "max_frames must be >= min_frames");
  require(videos_per_class >= 1, "videos_per_class must be >= 1");
  require(noise >= 0.0 && std::isfinite(noise), "noise must be finite and >= 0");
  require(semantic_shift >= 0.0 && std::isfinite(semantic_shift),
          "semantic_shift must be finite and >= 0");
}

SyntheticData synthesize_corpus(const SyntheticSpec& spec) {
  spec.validate();
  const int c_seen = spec.seen_classes;
  const int c_unseen = spec.unseen_classes;
  const int c_total = c_seen + c_unseen;

  SyntheticTruth truth;

  // Seen-class building blocks. Entries are kept away from 0 so that the
  // clipping of noisy frames barely biases the frame mean.
  auto centroid_rng = detail::make_engine(spec.seed, kCentroidStream);
  for (int c = 0; c < c_seen; ++c)
    truth.centroids.push_back(
        detail::uniform_matrix(spec.feature_dim, spec.latent_bags, centroid_rng, 0.25, 1.25));

  // Each unseen class mixes at most two seen classes with convex weights.
  auto mixing_rng = detail::make_engine(spec.seed, kMixingStream);
  truth.mixing = Eigen::MatrixXd::Zero(c_seen, c_unseen);
  std::uniform_int_distribution<int> pick_class(0, c_seen - 1);
  std::uniform_real_distribution<double> pick_weight(0.25, 0.75);
  for (int u = 0; u < c_unseen; ++u) {
    const int first = pick_class(mixing_rng);
    if (c_seen == 1) {
      truth.mixing(first, u) = 1.0;
      continue;
    }
    int second = pick_class(mixing_rng);
    while (second == first) second = pick_class(mixing_rng);
    const double w = pick_weight(mixing_rng);
    truth.mixing(first, u) = w;
    truth.mixing(second, u) = 1.0 - w;
  }
  for (int u = 0; u < c_unseen; ++u) {
    Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(spec.feature_dim, spec.latent_bags);
    for (int c = 0; c < c_seen; ++c) {
      const double w = truth.mixing(c, u);
      if (w != 0.0) centroid += w * truth.centroids[static_cast<std::size_t>(c)];
    }
    truth.centroids.push_back(std::move(centroid));
  }

  // Sparse non-negative semantic image of each seen class; unseen semantics
  // reuse the visual mixing weights.
  auto semantic_rng = detail::make_engine(spec.seed, kSemanticStream);
  std::bernoulli_distribution keep(0.4);
  std::uniform_real_distribution<double> magnitude(0.2, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  truth.semantic_basis = Eigen::MatrixXd::Zero(spec.semantic_dim, c_seen);
  for (int c = 0; c < c_seen; ++c) {
    for (int d = 0; d < spec.semantic_dim; ++d)
      if (keep(semantic_rng)) truth.semantic_basis(d, c) = magnitude(semantic_rng);
    // Guarantee a nonzero column.
    if (truth.semantic_basis.col(c).isZero()) {
      std::uniform_int_distribution<int> pick_dim(0, spec.semantic_dim - 1);
      truth.semantic_basis(pick_dim(semantic_rng), c) = magnitude(semantic_rng);
    }
  }
  Eigen::MatrixXd raw_semantics(spec.semantic_dim, c_total);
  raw_semantics.leftCols(c_seen) = truth.semantic_basis;
  raw_semantics.rightCols(c_unseen) = truth.semantic_basis * truth.mixing;
  auto shift_rng = detail::make_engine(spec.seed, kShiftStream);
  truth.shift_direction = detail::uniform_matrix(spec.semantic_dim, 1, shift_rng).col(0).normalized();
  raw_semantics.rightCols(c_unseen).colwise() += spec.semantic_shift * truth.shift_direction;
  for (Eigen::Index k = 0; k < raw_semantics.cols(); ++k) {
    for (Eigen::Index d = 0; d < raw_semantics.rows(); ++d)
      raw_semantics(d, k) = std::max(0.0, raw_semantics(d, k) + spec.noise * gauss(semantic_rng));
    if (raw_semantics.col(k).isZero()) raw_semantics(k % raw_semantics.rows(), k) = 1.0;
  }

  std::vector<std::string> names;
  for (int label = 1; label <= c_total; ++label) names.push_back(synthetic_name(label));

  auto make_videos = [&](int first_label, int count) {
    std::vector<Video> videos;
    for (int k = 0; k < count; ++k) {
      const int label = first_label + k;
      const auto& centroids = truth.centroids[static_cast<std::size_t>(label - 1)];
      auto rng = detail::make_engine(spec.seed, kVideoStream + static_cast<std::uint64_t>(label));
      std::uniform_int_distribution<int> length(spec.min_frames, spec.max_frames);
      for (int v = 0; v < spec.videos_per_class; ++v) {
        const int n_frames = length(rng);
        videos.push_back(Video{draw_frames(centroids, n_frames, spec.noise, rng), label});
      }
    }
    return videos;
  };

  std::vector<std::string> seen_names(names.begin(), names.begin() + c_seen);
  FeatureBagCorpus seen(make_videos(1, c_seen), std::move(seen_names));
  FeatureBagCorpus unseen(make_videos(c_seen + 1, c_unseen), names);

  return SyntheticData{std::move(seen), std::move(unseen),
                       SemanticTable::normalized(std::move(raw_semantics), names),
                       std::move(truth)};
}

PlantedFactorization synthesize_planted(Eigen::Index m1, Eigen::Index m2, Eigen::Index n,
                                        Eigen::Index rank, std::uint64_t seed) {
  if (m1 < 1 || m2 < 1 || n < 1 || rank < 1)
    throw ConfigError("planted factorization: all sizes must be >= 1");
  auto rng = detail::make_engine(seed, 7);
  PlantedFactorization p;
  p.U = detail::uniform_matrix(m1, rank, rng);
  p.W = detail::uniform_matrix(m2, rank, rng);
  p.V = detail::uniform_matrix(rank, n, rng);
  p.A = p.U * p.V;
  p.B = p.W * p.V;
  return p;
}

}  // namespace urlearn
