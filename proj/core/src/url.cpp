#include "urlearn/url.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "random.hpp"
#include "stats.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

constexpr int kMaxDampingHalvings = 40;

/// Student-t kernel (1 + ||v_j - v_k||^2)^-1 with a zero diagonal.
Eigen::MatrixXd student_kernel(const Eigen::MatrixXd& V) {
  const Eigen::Index n = V.cols();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double w = 1.0 / (1.0 + (V.col(i) - V.col(j)).squaredNorm());
      k(i, j) = w;
      k(j, i) = w;
    }
  return k;
}

AffinityMatrix normalise_pairs(Eigen::MatrixXd g) {
  // g is symmetric with a zero diagonal; sum over ordered pairs.
  double half = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = j + 1; i < g.rows(); ++i) half += g(i, j);
  const double z = 2.0 * half;
  AffinityMatrix out;
  out.normalizer = z;
  out.values = g / z;
  return out;
}

void check_affinity_pair(const AffinityMatrix& pa, const AffinityMatrix& pb, Eigen::Index n) {
  if (pa.size() != n || pb.size() != n)
    throw StructuralError("affinity matrices are " + std::to_string(pa.size()) + "x" +
                          std::to_string(pa.size()) + " and " + std::to_string(pb.size()) + "x" +
                          std::to_string(pb.size()) + ", expected " + std::to_string(n));
}

double kl_term(double p, double q) {
  if (p <= 0.0) return 0.0;
  return p * (std::log(p + kUrlEpsilon) - std::log(q + kUrlEpsilon));
}

}  // namespace

AffinityMatrix pairwise_affinities(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) throw StructuralError("pairwise affinities need at least 2 columns");
  if (!samples.allFinite()) throw StructuralError("pairwise affinities: non-finite input");
  if ((samples.array() < 0.0).any())
    throw StructuralError("pairwise affinities: input has negative entries");

  Eigen::MatrixXd simplex(samples.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = samples.col(j).sum();
    if (!(s > 0.0)) throw StructuralError("pairwise affinities: column " + std::to_string(j + 1) + " is all zero");
    simplex.col(j) = samples.col(j) / s;
  }

  // cross(i, j) = H(p_i, p_j) = -sum_r p_i[r] log(p_j[r] + eps)
  const Eigen::MatrixXd logs = (simplex.array() + kUrlEpsilon).log().matrix();
  const Eigen::MatrixXd cross = -(simplex.transpose() * logs);

  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d = 0.5 * (cross(i, j) + cross(j, i));
      dist(i, j) = d;
      dist(j, i) = d;
      upper.push_back(d);
    }
  const double tau = std::max(detail::median(std::move(upper)), kUrlEpsilon);

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double w = std::exp(-dist(i, j) / tau);
      g(i, j) = w;
      g(j, i) = w;
    }
  return normalise_pairs(std::move(g));
}

AffinityMatrix q_matrix(const Eigen::MatrixXd& V) {
  if (V.cols() < 2) throw StructuralError("q matrix needs at least 2 columns");
  return normalise_pairs(student_kernel(V));
}

double jsd_penalty(const AffinityMatrix& pa, const AffinityMatrix& pb, const AffinityMatrix& q) {
  const Eigen::Index n = q.size();
  check_affinity_pair(pa, pb, n);
  double kl_a = 0.0;
  double kl_b = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      kl_a += kl_term(pa(i, j), q(i, j));
      kl_b += kl_term(pb(i, j), q(i, j));
    }
  return 0.5 * kl_a + 0.5 * kl_b;
}

LossBreakdown objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                        const Eigen::MatrixXd& V, double eta, const AffinityMatrix& pa,
                        const AffinityMatrix& pb) {
  if (U.rows() != A.rows() || W.rows() != B.rows() || U.cols() != V.rows() ||
      W.cols() != V.rows() || A.cols() != V.cols() || B.cols() != V.cols())
    throw StructuralError("objective: incompatible shapes A " + std::to_string(A.rows()) + "x" +
                          std::to_string(A.cols()) + ", B " + std::to_string(B.rows()) + "x" +
                          std::to_string(B.cols()) + ", U " + std::to_string(U.rows()) + "x" +
                          std::to_string(U.cols()) + ", W " + std::to_string(W.rows()) + "x" +
                          std::to_string(W.cols()) + ", V " + std::to_string(V.rows()) + "x" +
                          std::to_string(V.cols()));
  LossBreakdown loss;
  loss.recon_a = (A - U * V).squaredNorm();
  loss.recon_b = (B - W * V).squaredNorm();
  loss.jsd = jsd_penalty(pa, pb, q_matrix(V));
  loss.total = loss.recon_a + loss.recon_b + eta * loss.jsd;
  return loss;
}

LossBreakdown objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                        const Eigen::MatrixXd& V, double eta) {
  return objective(A, B, U, W, V, eta, pairwise_affinities(A), pairwise_affinities(B));
}

Eigen::MatrixXd jsd_gradient(const Eigen::MatrixXd& V, const AffinityMatrix& pa,
                             const AffinityMatrix& pb, double eta) {
  check_affinity_pair(pa, pb, V.cols());
  const Eigen::MatrixXd kernel = student_kernel(V);
  const AffinityMatrix q = normalise_pairs(kernel);
  // R_jk = (p_A + p_B - 2q)_jk / (1 + ||v_j - v_k||^2), zero on the diagonal.
  const Eigen::MatrixXd r =
      ((pa.values + pb.values - 2.0 * q.values).array() * kernel.array()).matrix();
  const Eigen::RowVectorXd row_sums = r.colwise().sum();  // r is symmetric
  return 2.0 * eta * (V.array().rowwise() * row_sums.array() - (V * r).array()).matrix();
}

Eigen::MatrixXd update_U(const Eigen::MatrixXd& A, const Eigen::MatrixXd& U,
                         const Eigen::MatrixXd& V) {
  if (A.rows() != U.rows() || A.cols() != V.cols() || U.cols() != V.rows())
    throw StructuralError("update_U: incompatible shapes");
  const Eigen::MatrixXd numer = A * V.transpose();
  const Eigen::MatrixXd denom = U * (V * V.transpose());
  return (U.array() * numer.array() / (denom.array() + kUrlEpsilon)).matrix();
}

Eigen::MatrixXd update_W(const Eigen::MatrixXd& B, const Eigen::MatrixXd& W,
                         const Eigen::MatrixXd& V) {
  if (B.rows() != W.rows() || B.cols() != V.cols() || W.cols() != V.rows())
    throw StructuralError("update_W: incompatible shapes");
  const Eigen::MatrixXd numer = B * V.transpose();
  const Eigen::MatrixXd denom = W * (V * V.transpose());
  return (W.array() * numer.array() / (denom.array() + kUrlEpsilon)).matrix();
}

Eigen::MatrixXd update_V(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                         const Eigen::MatrixXd& V, const AffinityMatrix& pa,
                         const AffinityMatrix& pb, double eta) {
  if (U.rows() != A.rows() || W.rows() != B.rows() || U.cols() != V.rows() ||
      W.cols() != V.rows() || A.cols() != V.cols() || B.cols() != V.cols())
    throw StructuralError("update_V: incompatible shapes");
  check_affinity_pair(pa, pb, V.cols());

  Eigen::MatrixXd numer = U.transpose() * A + W.transpose() * B;
  Eigen::MatrixXd denom = (U.transpose() * U + W.transpose() * W) * V;

  if (eta != 0.0) {
    const Eigen::MatrixXd kernel = student_kernel(V);
    const AffinityMatrix q = normalise_pairs(kernel);
    // S = (p_A + p_B) .* K and T = 2q .* K, both symmetric with zero diagonal.
    const Eigen::MatrixXd s = ((pa.values + pb.values).array() * kernel.array()).matrix();
    const Eigen::MatrixXd t = (2.0 * q.values.array() * kernel.array()).matrix();
    const Eigen::RowVectorXd s_sums = s.colwise().sum();
    const Eigen::RowVectorXd t_sums = t.colwise().sum();
    // Upsilon_ij = eta * sum_k [S_jk V_ik + T_jk V_ij]
    // Gamma_ij   = eta * sum_k [S_jk V_ij + T_jk V_ik]
    numer += eta * (V * s + (V.array().rowwise() * t_sums.array()).matrix());
    denom += eta * ((V.array().rowwise() * s_sums.array()).matrix() + V * t);
  }
  return (V.array() * numer.array() / (denom.array() + kUrlEpsilon)).matrix();
}

Eigen::Index basis_size_high(Eigen::Index m1, Eigen::Index m2) {
  return static_cast<Eigen::Index>(std::llround(static_cast<double>(m1 + m2) / 2.0));
}

Eigen::Index basis_size_low(Eigen::Index m1, Eigen::Index m2) {
  return static_cast<Eigen::Index>(std::llround(static_cast<double>(m1 + m2) / 4.0));
}

UrlModel fit(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Eigen::Index rank, double eta,
             const FitConfig& config) {
  const Eigen::Index m1 = A.rows();
  const Eigen::Index m2 = B.rows();
  const Eigen::Index n = A.cols();
  if (B.cols() != n)
    throw StructuralError("fit: A has " + std::to_string(n) + " columns but B has " +
                          std::to_string(B.cols()));
  if (rank < 1 || rank >= std::min(m1, n) || rank >= std::min(m2, n))
    throw StructuralError("fit: D = " + std::to_string(rank) + " must satisfy 1 <= D < min(M_1, N) = " +
                          std::to_string(std::min(m1, n)) + " and D < min(M_2, N) = " +
                          std::to_string(std::min(m2, n)));
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw StructuralError("fit: eta must be finite and >= 0");
  if (!A.allFinite() || !B.allFinite()) throw StructuralError("fit: A and B must be finite");
  if ((A.array() < 0.0).any() || (B.array() < 0.0).any())
    throw StructuralError("fit: A and B must be non-negative");
  if (config.max_iter < 0) throw StructuralError("fit: max_iter must be >= 0");

  auto rng = detail::make_engine(config.seed);
  UrlModel model;
  model.eta = eta;
  model.U = detail::uniform_matrix(m1, rank, rng);
  model.W = detail::uniform_matrix(m2, rank, rng);
  model.V = detail::uniform_matrix(rank, n, rng);

  const AffinityMatrix pa = pairwise_affinities(A);
  const AffinityMatrix pb = pairwise_affinities(B);

  LossBreakdown previous = objective(A, B, model.U, model.W, model.V, eta, pa, pb);
  model.loss_trace.push_back(previous);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    model.U = update_U(A, model.U, model.V);
    model.W = update_W(B, model.W, model.V);

    Eigen::MatrixXd proposal = update_V(A, B, model.U, model.W, model.V, pa, pb, eta);
    LossBreakdown current = objective(A, B, model.U, model.W, proposal, eta, pa, pb);
    if (current.total > previous.total) {
      // The JSD part of the V rule carries no descent guarantee; shorten the
      // step along the multiplicative direction. Convex combinations of
      // non-negative matrices stay non-negative.
      ++model.damped_steps;
      const Eigen::MatrixXd step = proposal - model.V;
      double alpha = 1.0;
      bool accepted = false;
      for (int h = 0; h < kMaxDampingHalvings; ++h) {
        alpha *= 0.5;
        Eigen::MatrixXd trial = model.V + alpha * step;
        LossBreakdown trial_loss = objective(A, B, model.U, model.W, trial, eta, pa, pb);
        if (trial_loss.total <= previous.total) {
          proposal = std::move(trial);
          current = trial_loss;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        proposal = model.V;
        current = objective(A, B, model.U, model.W, proposal, eta, pa, pb);
      }
    }
    model.V = std::move(proposal);
    model.loss_trace.push_back(current);
    model.iterations = iter;

    const double change = std::abs(current.total - previous.total) /
                          std::max(previous.total, kUrlEpsilon);
    previous = current;
    if (change < config.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

MatrixBundle to_bundle(const UrlModel& model) {
  MatrixBundle bundle;
  bundle.set_meta("kind", "url_model");
  bundle.set_matrix("U", model.U);
  bundle.set_matrix("W", model.W);
  bundle.set_matrix("V", model.V);
  bundle.set_scalar("eta", model.eta);
  bundle.set_scalar("converged", model.converged ? 1.0 : 0.0);
  bundle.set_scalar("iterations", model.iterations);
  bundle.set_scalar("damped_steps", model.damped_steps);
  Eigen::MatrixXd trace(static_cast<Eigen::Index>(model.loss_trace.size()), 4);
  for (std::size_t t = 0; t < model.loss_trace.size(); ++t) {
    const auto& l = model.loss_trace[t];
    trace.row(static_cast<Eigen::Index>(t)) << l.recon_a, l.recon_b, l.jsd, l.total;
  }
  bundle.set_matrix("loss_trace", std::move(trace));
  return bundle;
}

UrlModel url_model_from_bundle(const MatrixBundle& bundle) {
  if (!bundle.has_meta("kind") || bundle.meta("kind") != "url_model")
    throw StructuralError("bundle is not a URL model");
  UrlModel model;
  model.U = bundle.matrix("U");
  model.W = bundle.matrix("W");
  model.V = bundle.matrix("V");
  model.eta = bundle.scalar("eta");
  model.converged = bundle.scalar("converged") != 0.0;
  model.iterations = static_cast<int>(bundle.scalar("iterations"));
  model.damped_steps = static_cast<int>(bundle.scalar("damped_steps"));
  const auto& trace = bundle.matrix("loss_trace");
  if (trace.cols() != 4) throw StructuralError("URL model loss trace must have 4 columns");
  for (Eigen::Index t = 0; t < trace.rows(); ++t)
    model.loss_trace.push_back({trace(t, 0), trace(t, 1), trace(t, 2), trace(t, 3)});
  if (model.U.cols() != model.V.rows() || model.W.cols() != model.V.rows())
    throw StructuralError("URL model factors have inconsistent ranks");
  return model;
}

void write_loss_trace_csv(const UrlModel& model, const std::filesystem::path& path,
                          const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "iteration,recon_A,recon_B,jsd,total\n";
  char buf[160];
  for (std::size_t t = 0; t < model.loss_trace.size(); ++t) {
    const auto& l = model.loss_trace[t];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", t, l.recon_a, l.recon_b, l.jsd,
                  l.total);
    out << buf;
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace urlearn
