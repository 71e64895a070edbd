// Property-level acceptance checks, one per criterion. Each prints a single
// "criterion N: PASS|FAIL" line followed by the measured numbers.
//
//   acceptance               run all criteria
//   acceptance --criterion N run one

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "support/cli_chain.hpp"
#include "support/oracles.hpp"
#include "urlearn/adapt.hpp"
#include "urlearn/error.hpp"
#include "urlearn/features.hpp"
#include "urlearn/pipeline.hpp"
#include "urlearn/procrustes.hpp"
#include "urlearn/recognize.hpp"
#include "urlearn/url.hpp"

using namespace urlearn;
using oracle::Mat;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct RandomInstance {
  Mat A, B;
  Eigen::Index rank = 0;
  double eta = 0.0;
};

/// M_1 in [10,40], M_2 in [5,20], N in [20,60], D in [3,8] (kept below M_2),
/// eta in {0, 0.1, 1}; entries uniform(0,1).
RandomInstance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int m1 = pick(10, 40);
  const int m2 = pick(5, 20);
  const int n = pick(20, 60);
  const int d = pick(3, std::min(8, m2 - 1));
  const double etas[] = {0.0, 0.1, 1.0};
  const double eta = etas[pick(0, 2)];
  return {oracle::random_nonneg(m1, n, rng()), oracle::random_nonneg(m2, n, rng()), d, eta};
}

// 1 -------------------------------------------------------------------------
Outcome monotone_optimization() {
  const auto start = Clock::now();
  double worst_rise = -INFINITY;
  int violations = 0;
  int damped = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = random_instance(1000 + s);
    const auto model = fit(inst.A, inst.B, inst.rank, inst.eta, {1000, 1e-6, s});
    damped += model.damped_steps;
    for (std::size_t t = 1; t < model.loss_trace.size(); ++t) {
      const double rise = model.loss_trace[t].total - model.loss_trace[t - 1].total;
      worst_rise = std::max(worst_rise, rise);
      if (rise > 1e-9) ++violations;
    }
  }
  const double elapsed = seconds_since(start);
  return {violations == 0 && elapsed < 60.0,
          "20 fits, steps rising above 1e-9: " + std::to_string(violations) +
              ", largest step change " + fmt("%.3g", worst_rise) + ", damped V steps " +
              std::to_string(damped) + ", " + fmt("%.2f", elapsed) + " s (limit 60)"};
}

// 2 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto start = Clock::now();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Mat V = oracle::random_nonneg(3, 6, 2000 + s);
    const auto pa = pairwise_affinities(oracle::random_nonneg(8, 6, 2100 + s));
    const auto pb = pairwise_affinities(oracle::random_nonneg(5, 6, 2200 + s));
    const double eta = 1.0;
    const Mat g = jsd_gradient(V, pa, pb, eta);
    Mat fd(3, 6);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) {
        Mat plus = V, minus = V;
        plus(i, j) += h;
        minus(i, j) -= h;
        fd(i, j) = eta * (jsd_penalty(pa, pb, q_matrix(plus)) - jsd_penalty(pa, pb, q_matrix(minus))) /
                   (2.0 * h);
      }
    // Entry-wise, with a floor of 1e-3 of the largest entry so that
    // near-zero components are judged on an absolute scale.
    const double floor = 1e-3 * fd.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 6; ++j)
        worst = std::max(worst, std::abs(g(i, j) - fd(i, j)) / std::max(std::abs(fd(i, j)), floor));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-4 && elapsed < 5.0,
          "10 instances (D=3, N=6), max relative error " + fmt("%.3g", worst) + " (limit 1e-4), " +
              fmt("%.3f", elapsed) + " s (limit 5)"};
}

// 3 -------------------------------------------------------------------------
Outcome nonnegativity_orthogonality() {
  double min_entry = INFINITY;
  double worst_orth = 0.0;
  int projections = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = random_instance(3000 + s);
    const auto model = fit(inst.A, inst.B, inst.rank, inst.eta, {1000, 1e-6, s});
    min_entry = std::min({min_entry, model.U.minCoeff(), model.W.minCoeff(), model.V.minCoeff()});
    for (const Mat* view : {&inst.A, &inst.B}) {
      const auto p = solve_rotation(*view, model.V);
      worst_orth = std::max(worst_orth, (p.matrix() * p.matrix().transpose() -
                                         Mat::Identity(p.target_dim(), p.target_dim()))
                                            .cwiseAbs()
                                            .maxCoeff());
      ++projections;
    }
  }
  return {min_entry >= 0.0 && worst_orth <= 1e-8,
          "20 fits, min factor entry " + fmt("%.3g", min_entry) + "; " + std::to_string(projections) +
              " projections, max |P P^T - I| " + fmt("%.3g", worst_orth) + " (limit 1e-8)"};
}

// 4 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
  double err_v = 0.0, err_p = 0.0, err_q = 0.0, err_mmd = 0.0;
  int predict_mismatch = 0;
  int predict_checked = 0;
  const int instances = 12;
  for (std::uint64_t s = 0; s < instances; ++s) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(s % 4);
    const Mat A = oracle::random_nonneg(7, n, 4000 + s);
    const Mat B = oracle::random_nonneg(5, n, 4100 + s);
    const Mat U = oracle::random_nonneg(7, 3, 4200 + s);
    const Mat W = oracle::random_nonneg(5, 3, 4300 + s);
    const Mat V = oracle::random_nonneg(3, n, 4400 + s);
    const auto pa = pairwise_affinities(A);
    const auto pb = pairwise_affinities(B);
    err_v = std::max(err_v, oracle::max_rel_err(update_V(A, B, U, W, V, pa, pb, 0.0),
                                                oracle::joint_nmf_v(A, B, U, W, V)));
    err_p = std::max(err_p, oracle::max_rel_err(pa.values, oracle::affinities(A)));
    err_q = std::max(err_q, oracle::max_rel_err(q_matrix(V).values, oracle::student_q(V)));

    const Mat X = oracle::random_normal(3, 10, 4500 + s);
    const Mat Y = oracle::random_normal(3, 8, 4600 + s, 1.0);
    const double bw = 0.5 + 0.1 * static_cast<double>(s);
    err_mmd = std::max(err_mmd, oracle::rel_err(mmd(X, Y, bw), oracle::mmd(X, Y, bw)));

    const Mat protos = oracle::random_normal(4, 6, 4700 + s);
    const std::vector<int> labels{1, 2, 3, 4, 5, 6};
    const PrototypeGallery gallery(protos, labels);
    const Projection pa_map(Mat::Identity(4, 7));
    const Mat points = oracle::random_normal(7, 20, 4800 + s);
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      const EmbeddingVector a{points.col(i), 1};
      const Eigen::VectorXd projected = points.col(i).head(4);
      if (predict(pa_map, a, gallery) != oracle::nearest_label(projected, protos, labels))
        ++predict_mismatch;
      ++predict_checked;
    }
  }
  const bool pass = err_v <= 1e-10 && err_p <= 1e-10 && err_q <= 1e-10 && err_mmd <= 1e-10 &&
                    predict_mismatch == 0;
  return {pass, std::to_string(instances) + " instances each; max relative error update_V " +
                    fmt("%.2g", err_v) + ", pairwise_affinities " + fmt("%.2g", err_p) +
                    ", q_matrix " + fmt("%.2g", err_q) + ", mmd " + fmt("%.2g", err_mmd) +
                    " (limit 1e-10); predict mismatches " + std::to_string(predict_mismatch) + "/" +
                    std::to_string(predict_checked)};
}

// 5 -------------------------------------------------------------------------
Outcome planted_recovery() {
  int recovered = 0;
  std::ostringstream errors;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = synthesize_planted(20, 12, 40, 4, s);
    const auto model = fit(p.A, p.B, 4, 0.0, {1000, 0.0, s});
    const double ea = (p.A - model.U * model.V).norm() / p.A.norm();
    const double eb = (p.B - model.W * model.V).norm() / p.B.norm();
    if (ea <= 5e-2 && eb <= 5e-2) ++recovered;
    errors << (s ? ", " : "") << fmt("%.3g", ea) << "/" << fmt("%.3g", eb);
  }
  return {recovered >= 4, "M_1=20, M_2=12, N=40, D=4, 1000 iterations; recovered " +
                              std::to_string(recovered) + "/5 seeds (need 4); relative errors A/B: " +
                              errors.str()};
}

// 6 and 7 -------------------------------------------------------------------
SyntheticSpec suite_spec(std::uint64_t seed, double shift) {
  SyntheticSpec s;
  s.seen_classes = 8;
  s.unseen_classes = 4;
  s.seed = seed;
  s.semantic_shift = shift;
  return s;
}

PipelineConfig suite_config(std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  c.fit.seed = seed;
  return c;
}

Outcome end_to_end() {
  const auto start = Clock::now();
  double full = 0.0, no_jsd = 0.0, cca = 0.0;
  std::ostringstream per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = synthesize_corpus(suite_spec(s, 0.0));
    auto c = suite_config(s);
    const double a = run_pipeline(d.seen, d.unseen, d.semantics, c).report.accuracy;
    c.eta = 0.0;
    const double b = run_pipeline(d.seen, d.unseen, d.semantics, c).report.accuracy;
    c = suite_config(s);
    c.method = Method::cca;
    const double k = run_pipeline(d.seen, d.unseen, d.semantics, c).report.accuracy;
    full += a / 5.0;
    no_jsd += b / 5.0;
    cca += k / 5.0;
    per_seed << (s ? "; " : "") << fmt("%.3f", a) << "/" << fmt("%.3f", b) << "/" << fmt("%.3f", k);
  }
  const double elapsed = seconds_since(start);
  const bool pass = full >= 0.5 && no_jsd < full && cca < no_jsd && elapsed < 300.0;
  return {pass, "mean accuracy full " + fmt("%.3f", full) + " (need >= 0.5), eta=0 " +
                    fmt("%.3f", no_jsd) + " (need < full), CCA " + fmt("%.3f", cca) +
                    " (need < eta=0); per seed full/eta0/cca: " + per_seed.str() + "; " +
                    fmt("%.1f", elapsed) + " s (limit 300)"};
}

Outcome adaptation_effect() {
  const double shifts[] = {0.5, 1.0, 2.0};
  int runs = 0, reduced = 0;
  double full = 0.0, plain = 0.0;
  for (double shift : shifts)
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto d = synthesize_corpus(suite_spec(s, shift));
      auto c = suite_config(s);
      const auto adapted = run_pipeline(d.seen, d.unseen, d.semantics, c);
      c.adapt = false;
      const auto unadapted = run_pipeline(d.seen, d.unseen, d.semantics, c);
      ++runs;
      if (*adapted.mmd_after <= *adapted.mmd_before) ++reduced;
      full += adapted.report.accuracy;
      plain += unadapted.report.accuracy;
    }
  full /= runs;
  plain /= runs;
  return {reduced == runs && full >= plain,
          "shifted suite (semantic shift 0.5, 1, 2 x 5 seeds, inductive): mmd reduced in " +
              std::to_string(reduced) + "/" + std::to_string(runs) + " runs; mean accuracy full " +
              fmt("%.3f", full) + " vs no adaptation " + fmt("%.3f", plain)};
}

// 8 -------------------------------------------------------------------------
double per_iteration_seconds(Eigen::Index n) {
  const Mat A = oracle::random_nonneg(40, n, 8000 + static_cast<std::uint64_t>(n));
  const Mat B = oracle::random_nonneg(20, n, 8100 + static_cast<std::uint64_t>(n));
  const int iterations = 30;
  double best = INFINITY;
  for (int rep = 0; rep < 3; ++rep) {
    const auto start = Clock::now();
    const auto model = fit(A, B, 8, 1.0, {iterations, 0.0, 1});
    best = std::min(best, seconds_since(start) / model.iterations);
  }
  return best;
}

Outcome complexity_scaling() {
  const double t50 = per_iteration_seconds(50);
  const double t100 = per_iteration_seconds(100);
  const double t200 = per_iteration_seconds(200);
  const double r1 = t100 / t50;
  const double r2 = t200 / t100;
  return {r1 <= 5.0 && r2 <= 5.0,
          "M_1=40, M_2=20, D=8; per-iteration ms at N=50/100/200: " + fmt("%.3f", t50 * 1e3) + "/" +
              fmt("%.3f", t100 * 1e3) + "/" + fmt("%.3f", t200 * 1e3) + "; ratios " +
              fmt("%.2f", r1) + ", " + fmt("%.2f", r2) + " (limit 5)"};
}

// 9 -------------------------------------------------------------------------
Outcome determinism() {
  using namespace testing_support;
  TempDir first("accept1"), second("accept2");
  const auto a_run = run_chain(first.path(), all_commands(), "11");
  const auto b_run = run_chain(second.path(), all_commands(), "11");
  if (a_run.code != 0 || b_run.code != 0)
    return {false, "command chain failed: " + a_run.err + b_run.err};
  const auto a = snapshot(first.path());
  const auto b = snapshot(second.path());
  int differing = 0;
  std::string names;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      ++differing;
      names += " " + name;
    }
  }
  return {differing == 0 && a.size() == b.size(),
          std::to_string(all_commands().size()) + " commands run twice, " + std::to_string(a.size()) +
              " artifacts compared, differing: " + std::to_string(differing) + names};
}

const std::vector<std::function<Outcome()>>& criteria() {
  static const std::vector<std::function<Outcome()>> c{
      monotone_optimization, gradient_correctness, nonnegativity_orthogonality,
      oracle_equivalence,    planted_recovery,     end_to_end,
      adaptation_effect,     complexity_scaling,   determinism};
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (int k = 1; k <= static_cast<int>(criteria().size()); ++k) {
    if (only != 0 && k != only) continue;
    Outcome o;
    try {
      o = criteria()[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << " | " << o.detail
              << std::endl;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
