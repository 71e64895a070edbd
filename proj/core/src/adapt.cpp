#include "urlearn/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "stats.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

constexpr double kRowEps = 2.2204460492503131e-16;  // double machine epsilon
constexpr double kTiny = 1e-12;

void sign_normalise(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, j)) > kTiny) {
        if (vectors(i, j) < 0.0) vectors.col(j) *= -1.0;
        break;
      }
    }
  }
}

// Unit-length columns; zero columns stay zero.
Eigen::MatrixXd unit_columns(Eigen::MatrixXd x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = x.col(j).norm();
    if (norm > 0.0) x.col(j) /= norm;
  }
  return x;
}

// MMD under the median heuristic over the pooled columns. A zero median
// falls back to the largest distance; fully coincident samples have zero
// discrepancy at every bandwidth.
double pooled_median_mmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  Eigen::MatrixXd all(X.rows(), X.cols() + Y.cols());
  all << X, Y;
  std::vector<double> d;
  for (Eigen::Index j = 0; j < all.cols(); ++j)
    for (Eigen::Index i = j + 1; i < all.cols(); ++i) d.push_back((all.col(i) - all.col(j)).norm());
  if (d.empty()) return 0.0;
  const double largest = *std::max_element(d.begin(), d.end());
  if (!(largest > 0.0)) return 0.0;
  const double median = detail::median(std::move(d));
  return mmd(X, Y, median > 0.0 ? median : largest);
}

}  // namespace

Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                double bandwidth) {
  if (X.rows() != Y.rows())
    throw StructuralError("gaussian_kernel: row dimensions differ (" + std::to_string(X.rows()) +
                          " vs " + std::to_string(Y.rows()) + ")");
  if (!(bandwidth > 0.0)) throw DegeneracyError("gaussian_kernel: bandwidth must be positive");
  const double denom = 2.0 * bandwidth * bandwidth;
  Eigen::MatrixXd k(X.cols(), Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j)
    for (Eigen::Index i = 0; i < X.cols(); ++i)
      k(i, j) = std::exp(-(X.col(i) - Y.col(j)).squaredNorm() / denom);
  return k;
}

double median_bandwidth(const Eigen::MatrixXd& X) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(X.cols() * (X.cols() - 1) / 2));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = j + 1; i < X.cols(); ++i) d.push_back((X.col(i) - X.col(j)).norm());
  const double bw = detail::median(std::move(d));
  if (!(bw > 0.0)) throw DegeneracyError("median pairwise distance is 0; no kernel bandwidth");
  return bw;
}

double mmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double bandwidth) {
  if (X.rows() != Y.rows())
    throw StructuralError("mmd: row dimensions differ (" + std::to_string(X.rows()) + " vs " +
                          std::to_string(Y.rows()) + ")");
  if (X.cols() < 1 || Y.cols() < 1) throw StructuralError("mmd: empty sample");
  const double xx = gaussian_kernel(X, X, bandwidth).mean();
  const double yy = gaussian_kernel(Y, Y, bandwidth).mean();
  const double xy = gaussian_kernel(X, Y, bandwidth).mean();
  return std::max(0.0, xx + yy - 2.0 * xy);
}

Eigen::VectorXd AdaptationResult::map(const Eigen::VectorXd& x) const {
  if (x.size() != inputs.rows())
    throw StructuralError("adaptation map: point has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(inputs.rows()));
  const Eigen::MatrixXd k = gaussian_kernel(unit_columns(inputs), unit_columns(x), bandwidth);
  return unit_columns(transform.transpose() * k);
}

MatrixBundle AdaptationResult::to_bundle() const {
  MatrixBundle b;
  b.set_meta("kind", "adaptation");
  b.set_matrix("adapted_source", adapted_source);
  b.set_matrix("adapted_prototypes", adapted_prototypes);
  b.set_matrix("adapted_extra", adapted_extra);
  b.set_matrix("transform", transform);
  b.set_matrix("kernel", kernel);
  b.set_matrix("inputs", inputs);
  b.set_scalar("bandwidth", bandwidth);
  b.set_scalar("mmd_before", mmd_before);
  b.set_scalar("mmd_after", mmd_after);
  return b;
}

AdaptationResult AdaptationResult::from_bundle(const MatrixBundle& b) {
  if (!b.has_meta("kind") || b.meta("kind") != "adaptation")
    throw StructuralError("bundle is not an adaptation result");
  AdaptationResult r;
  r.adapted_source = b.matrix("adapted_source");
  r.adapted_prototypes = b.matrix("adapted_prototypes");
  r.adapted_extra = b.matrix("adapted_extra");
  r.transform = b.matrix("transform");
  r.kernel = b.matrix("kernel");
  r.inputs = b.matrix("inputs");
  r.bandwidth = b.scalar("bandwidth");
  r.mmd_before = b.scalar("mmd_before");
  r.mmd_after = b.scalar("mmd_after");
  if (r.transform.rows() != r.inputs.cols())
    throw StructuralError("adaptation bundle: transform and inputs disagree");
  return r;
}

AdaptationResult tjm_adapt(const Eigen::MatrixXd& source, const Eigen::MatrixXd& prototypes,
                           const TjmParams& params, const Eigen::MatrixXd& extra_targets) {
  const Eigen::Index dim = source.rows();
  if (prototypes.rows() != dim || (extra_targets.size() > 0 && extra_targets.rows() != dim))
    throw StructuralError("tjm_adapt: source and target row dimensions differ");
  const Eigen::Index ns = source.cols();
  const Eigen::Index nu = prototypes.cols();
  const Eigen::Index ne = extra_targets.size() > 0 ? extra_targets.cols() : 0;
  if (ns < 1 || nu < 1) throw StructuralError("tjm_adapt: need at least one source and one prototype");
  if (params.iterations < 1) throw StructuralError("tjm_adapt: iterations must be >= 1");
  if (!(params.lambda >= 0.0)) throw StructuralError("tjm_adapt: lambda must be >= 0");
  const Eigen::Index nt = nu + ne;
  const Eigen::Index n = ns + nt;

  AdaptationResult result;
  result.inputs.resize(dim, n);
  result.inputs.leftCols(ns) = source;
  result.inputs.middleCols(ns, nu) = prototypes;
  if (ne > 0) result.inputs.rightCols(ne) = extra_targets;

  const Eigen::Index out_dim =
      params.out_dim ? *params.out_dim : std::min<Eigen::Index>(dim, n - 1);
  if (out_dim < 1 || out_dim > n - 1)
    throw DegeneracyError("tjm_adapt: output dimension " + std::to_string(out_dim) +
                          " exceeds the available spectrum (n - 1 = " + std::to_string(n - 1) + ")");

  const Eigen::MatrixXd target_all = result.inputs.rightCols(nt);
  result.mmd_before = pooled_median_mmd(source, target_all);

  // The kernel sees unit-length columns.
  const Eigen::MatrixXd unit_inputs = unit_columns(result.inputs);
  result.bandwidth = params.kernel_bandwidth ? *params.kernel_bandwidth : median_bandwidth(unit_inputs);
  if (!(result.bandwidth > 0.0)) throw DegeneracyError("tjm_adapt: bandwidth must be positive");
  result.kernel = gaussian_kernel(unit_inputs, unit_inputs, result.bandwidth);
  const Eigen::MatrixXd& k = result.kernel;

  // MMD coefficients e e^T, Frobenius-normalised; centring matrix H.
  Eigen::VectorXd e(n);
  e.head(ns).setConstant(1.0 / static_cast<double>(ns));
  e.tail(nt).setConstant(-1.0 / static_cast<double>(nt));
  Eigen::MatrixXd m = e * e.transpose();
  m /= m.norm();
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));

  const Eigen::MatrixXd kmk = k * m * k;
  Eigen::MatrixXd khk = k * h * k;
  khk = 0.5 * (khk + khk.transpose());
  Eigen::VectorXd g = Eigen::VectorXd::Ones(n);
  // A singular left-hand side (lambda = 0) gets a trace-scaled ridge.
  const double ridge = params.lambda > 0.0 ? 0.0 : 1e-9 * std::max(kmk.trace(), 1.0);

  Eigen::MatrixXd transform;
  for (int it = 0; it < params.iterations; ++it) {
    Eigen::MatrixXd lhs = kmk + params.lambda * Eigen::MatrixXd(g.asDiagonal());
    lhs.diagonal().array() += ridge;
    lhs = 0.5 * (lhs + lhs.transpose());

    // Minimising tr(A^T lhs A) s.t. A^T khk A = I: take the largest
    // eigenvalues of khk a = mu lhs a (lhs is positive definite).
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(khk, lhs);
    if (solver.info() != Eigen::Success) throw DegeneracyError("tjm_adapt: eigen-solver failed");
    const auto& mu = solver.eigenvalues();
    transform = solver.eigenvectors().rightCols(out_dim).rowwise().reverse();
    for (Eigen::Index j = 0; j < out_dim; ++j) {
      const double scale = transform.col(j).dot(khk * transform.col(j));
      if (!(mu(n - 1 - j) > kTiny) || !(scale > kTiny))
        throw DegeneracyError("tjm_adapt: only " + std::to_string(j) +
                              " non-degenerate directions available, need " + std::to_string(out_dim));
      transform.col(j) /= std::sqrt(scale);
    }
    sign_normalise(transform);

    for (Eigen::Index i = 0; i < ns; ++i)
      g(i) = 1.0 / std::sqrt(transform.row(i).squaredNorm() + kRowEps);
  }

  result.transform = transform;
  const Eigen::MatrixXd z = unit_columns(transform.transpose() * k);
  result.adapted_source = z.leftCols(ns);
  result.adapted_prototypes = z.middleCols(ns, nu);
  if (ne > 0) result.adapted_extra = z.rightCols(ne);
  result.mmd_after = pooled_median_mmd(result.adapted_source, z.rightCols(nt));
  return result;
}

}  // namespace urlearn
