#pragma once

// Universal representation learning: joint NMF of a visual matrix A
// (M_1 x N) and a semantic matrix B (M_2 x N) onto one shared non-negative
// coefficient matrix V (D x N), coupled by a Jensen-Shannon term that ties
// the pairwise affinities of A and B to a Student-t affinity over V.
//
//   L = ||A - UV||_F^2 + ||B - WV||_F^2 + eta * (KL(P_A||Q) + KL(P_B||Q)) / 2

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "urlearn/bundle.hpp"

namespace urlearn {

/// Guard added to every denominator and log argument.
inline constexpr double kUrlEpsilon = 1e-12;

/// N x N pairwise distribution: symmetric, zero diagonal, off-diagonal sum 1.
struct AffinityMatrix {
  Eigen::MatrixXd values;
  /// Sum of the unnormalised similarities over all ordered pairs k != l.
  double normalizer = 0.0;

  Eigen::Index size() const noexcept { return values.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

struct LossBreakdown {
  double recon_a = 0.0;
  double recon_b = 0.0;
  double jsd = 0.0;
  double total = 0.0;
};

struct UrlModel {
  Eigen::MatrixXd U;  // M_1 x D
  Eigen::MatrixXd W;  // M_2 x D
  Eigen::MatrixXd V;  // D x N
  double eta = 0.0;
  /// Entry 0 is the loss at initialisation, entry t the loss after iteration t.
  std::vector<LossBreakdown> loss_trace;
  bool converged = false;
  int iterations = 0;
  /// Iterations whose V step was shortened to keep the objective from rising.
  int damped_steps = 0;

  Eigen::Index rank() const noexcept { return V.rows(); }
};

struct FitConfig {
  int max_iter = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

/// P_A / P_B: columns rescaled to the simplex, symmetric cross-entropy
/// distance, g = exp(-d / tau) with tau the median off-diagonal distance,
/// normalised over all ordered pairs.
AffinityMatrix pairwise_affinities(const Eigen::MatrixXd& samples);

/// Student-t affinity q_ij proportional to (1 + ||v_i - v_j||^2)^-1.
AffinityMatrix q_matrix(const Eigen::MatrixXd& V);

/// (KL(P_A||Q) + KL(P_B||Q)) / 2 over off-diagonal pairs.
double jsd_penalty(const AffinityMatrix& pa, const AffinityMatrix& pb, const AffinityMatrix& q);

LossBreakdown objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                        const Eigen::MatrixXd& V, double eta);

/// Same, with the fixed data affinities supplied by the caller.
LossBreakdown objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                        const Eigen::MatrixXd& V, double eta, const AffinityMatrix& pa,
                        const AffinityMatrix& pb);

/// Gradient of eta * jsd_penalty(P_A, P_B, q_matrix(V)) with respect to V.
Eigen::MatrixXd jsd_gradient(const Eigen::MatrixXd& V, const AffinityMatrix& pa,
                             const AffinityMatrix& pb, double eta);

/// U <- U .* (A V^T) ./ (U V V^T)
Eigen::MatrixXd update_U(const Eigen::MatrixXd& A, const Eigen::MatrixXd& U,
                         const Eigen::MatrixXd& V);

/// W <- W .* (B V^T) ./ (W V V^T)
Eigen::MatrixXd update_W(const Eigen::MatrixXd& B, const Eigen::MatrixXd& W,
                         const Eigen::MatrixXd& V);

/// V <- V .* (U^T A + W^T B + Upsilon) ./ (U^T U V + W^T W V + Gamma), with Q
/// recomputed from the incoming V.
Eigen::MatrixXd update_V(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                         const Eigen::MatrixXd& V, const AffinityMatrix& pa,
                         const AffinityMatrix& pb, double eta);

/// Alternates update_U, update_W and update_V from a uniform(0,1) start until
/// the relative change of the total loss falls below `tol` or `max_iter`.
/// Requires 1 <= D < min(M_1, N) and D < min(M_2, N).
UrlModel fit(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Eigen::Index rank, double eta,
             const FitConfig& config = {});

/// D_high = round((M_1 + M_2) / 2), D_low = round((M_1 + M_2) / 4).
Eigen::Index basis_size_high(Eigen::Index m1, Eigen::Index m2);
Eigen::Index basis_size_low(Eigen::Index m1, Eigen::Index m2);

MatrixBundle to_bundle(const UrlModel& model);
UrlModel url_model_from_bundle(const MatrixBundle& bundle);

/// CSV with header `iteration,recon_A,recon_B,jsd,total`. Each string in
/// `comments` is emitted first as a `# ` line.
void write_loss_trace_csv(const UrlModel& model, const std::filesystem::path& path,
                          const std::vector<std::string>& comments = {});

}  // namespace urlearn
