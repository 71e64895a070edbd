#pragma once

// Transfer-joint-matching style adaptation of projected unseen-class
// prototypes toward the source UR distribution: MMD feature matching plus
// l2,1 reweighting of source rows under a kernel-PCA constraint.

#include <optional>

#include <Eigen/Core>

#include "urlearn/bundle.hpp"

namespace urlearn {

struct TjmParams {
  /// Gaussian bandwidth; the median pairwise distance when unset.
  std::optional<double> kernel_bandwidth;
  double lambda = 1.0;
  /// Output dimension D'; min(D, n - 1) when unset.
  std::optional<int> out_dim;
  int iterations = 10;
};

struct AdaptationResult {
  Eigen::MatrixXd adapted_source;      // D' x N_s
  Eigen::MatrixXd adapted_prototypes;  // D' x C_u
  Eigen::MatrixXd adapted_extra;       // D' x N_extra (transductive targets), may be empty
  Eigen::MatrixXd transform;           // n x D'
  Eigen::MatrixXd kernel;              // n x n over the stacked inputs
  Eigen::MatrixXd inputs;              // D x n, stacked [source, prototypes, extra]
  double bandwidth = 0.0;
  double mmd_before = 0.0;
  double mmd_after = 0.0;

  /// Out-of-sample image z = transform^T k(inputs, x) of a UR-space point.
  Eigen::VectorXd map(const Eigen::VectorXd& x) const;

  MatrixBundle to_bundle() const;
  static AdaptationResult from_bundle(const MatrixBundle& bundle);
};

/// Gaussian kernel exp(-||x - y||^2 / (2 bandwidth^2)) between columns.
Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                double bandwidth);

/// Median pairwise Euclidean distance between the columns of X.
double median_bandwidth(const Eigen::MatrixXd& X);

/// Biased squared MMD between the column samples of X and Y.
double mmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double bandwidth);

/// Adapts [source, prototypes] jointly. `extra_targets` (transductive mode)
/// joins the target domain. mmd_before is measured on the raw inputs and
/// mmd_after on the adapted columns, each with its own median bandwidth.
AdaptationResult tjm_adapt(const Eigen::MatrixXd& source, const Eigen::MatrixXd& prototypes,
                           const TjmParams& params,
                           const Eigen::MatrixXd& extra_targets = Eigen::MatrixXd());

}  // namespace urlearn
