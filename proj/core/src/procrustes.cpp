#include "urlearn/procrustes.hpp"

#include <string>

#include <Eigen/SVD>

#include "urlearn/error.hpp"

namespace urlearn {

namespace {

constexpr double kSingularFloor = 1e-10;

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Projection::Projection(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() < 1 || matrix_.rows() > matrix_.cols())
    throw StructuralError("projection must be D x M with 1 <= D <= M, got " + shape(matrix_));
  if (!matrix_.allFinite()) throw StructuralError("projection has non-finite entries");
  if (orthonormality_error() > kOrthonormalityTolerance)
    throw StructuralError("projection rows are not orthonormal (error " +
                          std::to_string(orthonormality_error()) + ")");
}

Projection Projection::identity(Eigen::Index dim) {
  return Projection(Eigen::MatrixXd::Identity(dim, dim));
}

double Projection::orthonormality_error() const {
  const Eigen::MatrixXd gram = matrix_ * matrix_.transpose();
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

Projection solve_rotation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V) {
  if (X.cols() != V.cols())
    throw StructuralError("solve_rotation: X is " + shape(X) + " but V is " + shape(V));
  const Eigen::Index d = V.rows();
  if (d < 1 || d > X.rows() || d > X.cols())
    throw StructuralError("solve_rotation: need 1 <= D <= min(M, N); X is " + shape(X) +
                          ", V is " + shape(V));

  const Eigen::MatrixXd cross = V * X.transpose();  // D x M
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv(0) : 0.0;
  if (!(largest > 0.0) || sv(d - 1) < kSingularFloor * largest)
    throw DegeneracyError("solve_rotation: V X^T has rank below D = " + std::to_string(d) +
                          "; the rotation is ambiguous");
  // cross = Q Sigma S^T with Q = U (D x D), S = V_svd (M x D).
  return Projection(svd.matrixU() * svd.matrixV().transpose());
}

Eigen::MatrixXd project(const Projection& p, const Eigen::MatrixXd& X) {
  if (X.rows() != p.source_dim())
    throw StructuralError("project: input has " + std::to_string(X.rows()) +
                          " rows, projection expects " + std::to_string(p.source_dim()));
  return p.matrix() * X;
}

Eigen::VectorXd project(const Projection& p, const Eigen::VectorXd& x) {
  if (x.size() != p.source_dim())
    throw StructuralError("project: input has length " + std::to_string(x.size()) +
                          ", projection expects " + std::to_string(p.source_dim()));
  return p.matrix() * x;
}

}  // namespace urlearn
