#pragma once

// Orthogonal maps from a view space (A or B) into the shared space V.

#include <Eigen/Core>

namespace urlearn {

/// D x M matrix with orthonormal rows (P P^T = I_D).
class Projection {
 public:
  static constexpr double kOrthonormalityTolerance = 1e-8;

  /// Throws StructuralError unless the rows are orthonormal and finite.
  explicit Projection(Eigen::MatrixXd matrix);

  static Projection identity(Eigen::Index dim);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  Eigen::Index source_dim() const noexcept { return matrix_.cols(); }
  Eigen::Index target_dim() const noexcept { return matrix_.rows(); }

  /// max |P P^T - I|.
  double orthonormality_error() const;

 private:
  Eigen::MatrixXd matrix_;
};

/// Row-orthonormal P minimising ||P X - V||_F, from the SVD
/// V X^T = Q Sigma S^T as P = Q S^T. X is M x N, V is D x N, D <= min(M, N).
/// A smallest singular value below 1e-10 (relative to the largest) makes the
/// rotation ambiguous and raises DegeneracyError.
Projection solve_rotation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V);

/// P X, column by column.
Eigen::MatrixXd project(const Projection& p, const Eigen::MatrixXd& X);
Eigen::VectorXd project(const Projection& p, const Eigen::VectorXd& x);

}  // namespace urlearn
