#pragma once

// Frame-feature corpora, semantic label embeddings, and the synthetic
// generators used for desk-scale verification.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace urlearn {

/// One video: descriptors stored frame-per-column (D_feat x L).
struct Video {
  Eigen::MatrixXd frames;
  int label = 0;  // 1-based class id
};

/// Labelled set of variable-length frame sequences.
///
/// Invariants, checked on construction: at least one video, every video has
/// at least one frame, all frames share one dimensionality, entries are
/// finite, and every label lies in [1, class_names.size()].
class FeatureBagCorpus {
 public:
  FeatureBagCorpus(std::vector<Video> videos, std::vector<std::string> class_names);

  const std::vector<Video>& videos() const noexcept { return videos_; }
  const Video& video(std::size_t i) const { return videos_.at(i); }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  std::size_t size() const noexcept { return videos_.size(); }
  Eigen::Index dim() const noexcept { return dim_; }
  int num_classes() const noexcept { return static_cast<int>(class_names_.size()); }

  /// Labels of all videos, in corpus order.
  std::vector<int> labels() const;
  /// Sorted distinct labels that actually occur.
  std::vector<int> present_labels() const;

 private:
  std::vector<Video> videos_;
  std::vector<std::string> class_names_;
  Eigen::Index dim_ = 0;
};

enum class CorpusFormat { csv, binary };

/// Binary layout: "URLC" | u32 version=1 | u32 N | u32 D_feat, then per video
/// u32 label | u32 L | L*D_feat f64, frame-major. All little-endian.
/// CSV layout: one row per frame, `video_id,label,f_1,...,f_D`.
/// Class names are not stored; loading yields `class_<k>` for k = 1..max label.
FeatureBagCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
void save_corpus(const FeatureBagCorpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format);

/// Unit-normalised label embeddings, one column per class name.
class SemanticTable {
 public:
  static constexpr double kNormTolerance = 1e-9;

  /// Columns must already have unit Euclidean norm (within kNormTolerance).
  SemanticTable(Eigen::MatrixXd embeddings, std::vector<std::string> names);

  /// Normalises every column first; a zero column is a DegeneracyError.
  static SemanticTable normalized(Eigen::MatrixXd raw, std::vector<std::string> names);

  const Eigen::MatrixXd& embeddings() const noexcept { return embeddings_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Eigen::Index dim() const noexcept { return embeddings_.rows(); }
  int size() const noexcept { return static_cast<int>(embeddings_.cols()); }

  /// Column for a 1-based label.
  Eigen::VectorXd column(int label) const;
  /// Columns for a list of 1-based labels, in order.
  Eigen::MatrixXd columns(const std::vector<int>& labels) const;

 private:
  Eigen::MatrixXd embeddings_;
  std::vector<std::string> names_;
};

/// Splits a class name into tokens on whitespace and underscores.
std::vector<std::string> split_class_name(const std::string& name);

/// Reads a text word-vector file (`token v_1 ... v_d` per line). Each class
/// name is split into tokens, found token vectors are summed and the sum is
/// unit-normalised. Missing tokens are skipped; a class with no coverage is a
/// LookupError. The first occurrence of a duplicated token wins.
SemanticTable load_word_vectors(const std::filesystem::path& path,
                                const std::vector<std::string>& class_names);

/// Writes one line per class name, values printed round-trip exact.
void save_word_vectors(const SemanticTable& table, const std::filesystem::path& path);

struct SyntheticSpec {
  int seen_classes = 8;
  int unseen_classes = 4;
  int latent_bags = 3;  // H_true
  int feature_dim = 16;
  int semantic_dim = 24;
  int min_frames = 8;
  int max_frames = 16;
  int videos_per_class = 10;
  double noise = 0.1;
  /// Magnitude of a common non-negative offset added to every unseen-class
  /// semantic vector before normalisation (a dataset-level bias).
  double semantic_shift = 0.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on any count < 1, max_frames < min_frames or noise < 0.
  void validate() const;
};

/// Generator record for a synthetic draw.
struct SyntheticTruth {
  /// Per class (seen first, then unseen) a D_feat x H_true centroid matrix.
  std::vector<Eigen::MatrixXd> centroids;
  /// C_seen x C_unseen; column u holds the convex weights over seen classes
  /// from which unseen class u was composed.
  Eigen::MatrixXd mixing;
  /// L_sem x C_seen non-negative semantic image of each seen class.
  Eigen::MatrixXd semantic_basis;
  /// Unit direction of the unseen-class semantic offset.
  Eigen::VectorXd shift_direction;
};

struct SyntheticData {
  FeatureBagCorpus seen;    // labels 1..C_seen
  FeatureBagCorpus unseen;  // labels C_seen+1..C_seen+C_unseen
  SemanticTable semantics;  // one column per class, seen first
  SyntheticTruth truth;
};

/// Draws a seen/unseen corpus pair whose unseen classes are sparse convex
/// combinations of seen-class centroids, with semantics sharing the same
/// combination weights. Pure function of `spec`.
SyntheticData synthesize_corpus(const SyntheticSpec& spec);

/// Exact non-negative low-rank pair A = U V, B = W V with uniform(0,1) factors.
struct PlantedFactorization {
  Eigen::MatrixXd A, B, U, W, V;
};

PlantedFactorization synthesize_planted(Eigen::Index m1, Eigen::Index m2, Eigen::Index n,
                                        Eigen::Index rank, std::uint64_t seed);

}  // namespace urlearn
