#include "urlearn/baselines.hpp"

#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "urlearn/error.hpp"

namespace urlearn {

namespace {

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& cov, double ridge) {
  const double shift = ridge * std::max(cov.diagonal().mean(), 1e-12);
  Eigen::MatrixXd c = cov;
  c.diagonal().array() += shift;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  if (eig.info() != Eigen::Success) throw DegeneracyError("cca: covariance eigen-solver failed");
  return eig.operatorInverseSqrt();
}

}  // namespace

Eigen::MatrixXd CcaModel::project_a(const Eigen::MatrixXd& X) const {
  if (X.rows() != mean_a.size()) throw StructuralError("cca: visual input has the wrong length");
  return weights_a.transpose() * (X.colwise() - mean_a);
}

Eigen::MatrixXd CcaModel::project_b(const Eigen::MatrixXd& Y) const {
  if (Y.rows() != mean_b.size()) throw StructuralError("cca: semantic input has the wrong length");
  return weights_b.transpose() * (Y.colwise() - mean_b);
}

CcaModel fit_cca(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Eigen::Index dim,
                 double ridge) {
  if (A.cols() != B.cols()) throw StructuralError("cca: views have different sample counts");
  if (A.cols() < 2) throw StructuralError("cca: need at least two samples");
  if (dim < 1 || dim > std::min(A.rows(), B.rows()))
    throw StructuralError("cca: dimension " + std::to_string(dim) + " outside [1, min(M_1, M_2)]");
  if (!(ridge > 0.0)) throw StructuralError("cca: ridge must be positive");

  CcaModel m;
  m.mean_a = A.rowwise().mean();
  m.mean_b = B.rowwise().mean();
  const Eigen::MatrixXd ac = A.colwise() - m.mean_a;
  const Eigen::MatrixXd bc = B.colwise() - m.mean_b;
  const double scale = 1.0 / static_cast<double>(A.cols() - 1);
  const Eigen::MatrixXd wa = inverse_sqrt(scale * ac * ac.transpose(), ridge);
  const Eigen::MatrixXd wb = inverse_sqrt(scale * bc * bc.transpose(), ridge);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wa * (scale * ac * bc.transpose()) * wb,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  m.weights_a = wa * svd.matrixU().leftCols(dim);
  m.weights_b = wb * svd.matrixV().leftCols(dim);
  m.correlations = svd.singularValues().head(dim);
  return m;
}

}  // namespace urlearn
