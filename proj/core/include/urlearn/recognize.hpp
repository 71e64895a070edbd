#pragma once

// Unseen-class prototype galleries, nearest-prototype prediction and
// accuracy reports.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "urlearn/adapt.hpp"
#include "urlearn/bundle.hpp"
#include "urlearn/features.hpp"
#include "urlearn/gmil.hpp"
#include "urlearn/procrustes.hpp"

namespace urlearn {

/// One column per unseen class. An adapted gallery also carries the
/// adaptation whose out-of-sample map sends projected test points into the
/// prototypes' space.
class PrototypeGallery {
 public:
  /// Throws StructuralError on duplicate labels or a column/label mismatch.
  PrototypeGallery(Eigen::MatrixXd prototypes, std::vector<int> labels);
  PrototypeGallery(AdaptationResult adaptation, std::vector<int> labels);

  const Eigen::MatrixXd& prototypes() const noexcept { return prototypes_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  bool adapted() const noexcept { return adaptation_.has_value(); }
  const std::optional<AdaptationResult>& adaptation() const noexcept { return adaptation_; }
  Eigen::Index dim() const noexcept { return prototypes_.rows(); }
  std::size_t size() const noexcept { return labels_.size(); }

  /// Moves a UR-space point into gallery space (identity unless adapted).
  Eigen::VectorXd to_gallery_space(const Eigen::VectorXd& ur_point) const;

  MatrixBundle to_bundle() const;
  static PrototypeGallery from_bundle(const MatrixBundle& bundle);

 private:
  Eigen::MatrixXd prototypes_;
  std::vector<int> labels_;
  std::optional<AdaptationResult> adaptation_;
};

/// prototypes = P_B S_u, one column per label. `labels` must not intersect
/// `seen_labels`.
PrototypeGallery build_gallery(const Projection& pb, const SemanticTable& unseen_semantics,
                               const std::vector<int>& labels,
                               const std::vector<int>& seen_labels = {});

/// Label of the column nearest to `point` (already in gallery space); ties go
/// to the lowest label.
int nearest_prototype(const Eigen::VectorXd& point, const PrototypeGallery& gallery);

/// nearest_prototype applied to P_A a_hat (mapped through the adaptation for
/// adapted galleries).
int predict(const Projection& pa, const EmbeddingVector& a_hat, const PrototypeGallery& gallery);

struct ClassScore {
  int label = 0;
  int support = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<ClassScore> per_class;  // classes present in the truth, ascending
  std::vector<int> labels;            // confusion axes: every label seen, ascending
  Eigen::MatrixXi confusion;          // rows truth, columns prediction
  std::string split;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> hyperparams;
};

/// Throws StructuralError on empty input or a length mismatch.
EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth);

/// Fields: accuracy, per_class, confusion, split, seed, hyperparams.
std::string to_json(const EvalReport& report, int indent = 2);

}  // namespace urlearn
