#pragma once

// Classical two-view CCA, used as a comparison point for the shared space.

#include <Eigen/Core>

namespace urlearn {

struct CcaModel {
  Eigen::VectorXd mean_a;
  Eigen::VectorXd mean_b;
  Eigen::MatrixXd weights_a;     // M_1 x D
  Eigen::MatrixXd weights_b;     // M_2 x D
  Eigen::VectorXd correlations;  // descending

  Eigen::MatrixXd project_a(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd project_b(const Eigen::MatrixXd& Y) const;
};

/// Top-D canonical directions from the SVD of the whitened cross-covariance
/// Cxx^-1/2 Cxy Cyy^-1/2. Each covariance gets a ridge of
/// `ridge * mean(diag)` so rank-deficient views stay invertible.
CcaModel fit_cca(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Eigen::Index dim,
                 double ridge = 1e-3);

}  // namespace urlearn
