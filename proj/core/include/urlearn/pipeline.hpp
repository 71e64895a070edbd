#pragma once

// End-to-end zero-shot runs (encode, learn the shared space, project, adapt,
// predict) and the leave-one-hop-away hyperparameter search built on them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "urlearn/adapt.hpp"
#include "urlearn/features.hpp"
#include "urlearn/gmil.hpp"
#include "urlearn/procrustes.hpp"
#include "urlearn/recognize.hpp"
#include "urlearn/url.hpp"

namespace urlearn {

enum class BasisMode { low, high, fixed };
enum class Method { url, cca };

struct PipelineConfig {
  int bags_per_class = 5;
  int k_nn = 200;
  BasisMode basis = BasisMode::low;
  Eigen::Index rank = 0;  // used with BasisMode::fixed
  double eta = 1.0;
  FitConfig fit;
  Method method = Method::url;
  bool adapt = true;
  bool transductive = false;
  TjmParams tjm;
  std::uint64_t seed = 0;
};

struct RankChoice {
  Eigen::Index requested = 0;
  Eigen::Index used = 0;
  bool clamped() const noexcept { return used != requested; }
};

/// D_low / D_high / fixed, clamped to min(M_1, M_2, N) - 1 so the
/// factorization stays strictly low-rank, and to the numerical rank of each
/// view so both projections are well defined.
RankChoice resolve_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const PipelineConfig& config);

/// Number of singular values above 1e-9 times the largest.
Eigen::Index numerical_rank(const Eigen::MatrixXd& X);

/// Seen-class training views and encoded unseen test videos.
struct EncodedSplit {
  BagModel bags;
  Eigen::MatrixXd A;  // M_1 x N
  Eigen::MatrixXd B;  // M_2 x N
  std::vector<int> seen_labels;
  std::vector<int> unseen_labels;
  SemanticTable unseen_semantics;
  Eigen::MatrixXd test_embeddings;  // M_1 x N_test
  std::vector<int> truth;
};

/// `semantics` holds one column per class id across both corpora. Test
/// labels must be disjoint from training labels.
EncodedSplit encode_split(const FeatureBagCorpus& train, const FeatureBagCorpus& test,
                          const SemanticTable& semantics, const PipelineConfig& config);

struct SharedSpace {
  UrlModel model;
  Projection pa;
  Projection pb;
};

SharedSpace learn_shared_space(const EncodedSplit& split, Eigen::Index rank, double eta,
                               const FitConfig& fit);

struct PipelineResult {
  std::vector<int> predictions;
  EvalReport report;
  RankChoice rank;
  std::optional<double> mmd_before;
  std::optional<double> mmd_after;
};

/// Gallery, optional adaptation and prediction for an already learned space.
PipelineResult recognize_split(const EncodedSplit& split, const SharedSpace& space,
                               const PipelineConfig& config);

PipelineResult run_pipeline(const FeatureBagCorpus& train, const FeatureBagCorpus& test,
                            const SemanticTable& semantics, const PipelineConfig& config);

struct CvGrid {
  std::vector<double> etas{0.01, 0.1, 1.0, 10.0};
  std::vector<double> lambdas{0.1, 1.0, 10.0};
};

struct CvPoint {
  double eta = 0.0;
  double lambda = 0.0;
  double mean_accuracy = 0.0;
  std::vector<EvalReport> fold_reports;
};

struct CvResult {
  double best_eta = 0.0;
  TjmParams best_tjm;
  std::vector<EvalReport> fold_reports;  // at the best grid point
  std::vector<CvPoint> grid;
  std::vector<std::vector<int>> training_hops;  // per fold
};

/// Indices of the `count` hops whose mean semantic embeddings lie furthest
/// from hop `held_out`; ties go to the lower index.
std::vector<int> furthest_hops(const SemanticTable& semantics,
                               const std::vector<std::vector<int>>& hops, int held_out,
                               int count = 3);

/// Each hop in turn is the unseen validation set, the three furthest hops
/// are the seen training set. Returns the grid point with the best mean
/// validation accuracy; ties go to the smaller eta, then the smaller lambda.
CvResult cross_validate(const FeatureBagCorpus& corpus, const SemanticTable& semantics,
                        const std::vector<std::vector<int>>& hops, const CvGrid& grid,
                        const PipelineConfig& config);

}  // namespace urlearn
