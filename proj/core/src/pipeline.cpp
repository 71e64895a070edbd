#include "urlearn/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/SVD>

#include "urlearn/baselines.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

const char* method_name(Method m) { return m == Method::url ? "url" : "cca"; }

// Copies the videos of `classes` (old ids) into a corpus labelled
// first_label, first_label + 1, ... in the order given.
FeatureBagCorpus relabel(const FeatureBagCorpus& corpus, const std::vector<int>& classes,
                         int first_label, std::vector<std::string> names) {
  std::map<int, int> to_new;
  for (std::size_t i = 0; i < classes.size(); ++i)
    to_new[classes[i]] = first_label + static_cast<int>(i);
  std::vector<Video> videos;
  for (const auto& v : corpus.videos()) {
    const auto it = to_new.find(v.label);
    if (it != to_new.end()) videos.push_back(Video{v.frames, it->second});
  }
  return FeatureBagCorpus(std::move(videos), std::move(names));
}

}  // namespace

Eigen::Index numerical_rank(const Eigen::MatrixXd& X) {
  if (X.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) return 0;
  return (sv.array() > 1e-9 * sv(0)).count();
}

RankChoice resolve_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const PipelineConfig& config) {
  const Eigen::Index m1 = A.rows(), m2 = B.rows(), n = A.cols();
  RankChoice r;
  switch (config.basis) {
    case BasisMode::low: r.requested = basis_size_low(m1, m2); break;
    case BasisMode::high: r.requested = basis_size_high(m1, m2); break;
    case BasisMode::fixed: r.requested = config.rank; break;
  }
  if (r.requested < 1) throw ConfigError("basis size must be >= 1");
  const Eigen::Index cap = std::min({m1, m2, n}) - 1;
  if (cap < 1)
    throw StructuralError("views are too small for a low-rank factorization (min(M_1, M_2, N) = " +
                          std::to_string(cap + 1) + ")");
  r.used = std::min({r.requested, cap, numerical_rank(A), numerical_rank(B)});
  if (r.used < 1) throw DegeneracyError("a training view has numerical rank 0");
  return r;
}

EncodedSplit encode_split(const FeatureBagCorpus& train, const FeatureBagCorpus& test,
                          const SemanticTable& semantics, const PipelineConfig& config) {
  if (train.dim() != test.dim())
    throw StructuralError("training and test frames have different dimensions (" +
                          std::to_string(train.dim()) + " vs " + std::to_string(test.dim()) + ")");
  auto seen = train.present_labels();
  auto unseen = test.present_labels();
  std::vector<int> overlap;
  std::set_intersection(seen.begin(), seen.end(), unseen.begin(), unseen.end(),
                        std::back_inserter(overlap));
  if (!overlap.empty())
    throw StructuralError("class " + std::to_string(overlap.front()) +
                          " appears in both the training and the test corpus");

  auto bags = build_bags(train, config.bags_per_class, config.k_nn, config.seed);
  Eigen::MatrixXd a = embed_corpus(bags, train);
  Eigen::MatrixXd b = semantics.columns(train.labels());
  Eigen::MatrixXd test_a = embed_corpus(bags, test);

  std::vector<std::string> unseen_names;
  for (int label : unseen) unseen_names.push_back(semantics.names().at(static_cast<std::size_t>(label - 1)));
  SemanticTable unseen_table(semantics.columns(unseen), std::move(unseen_names));

  return EncodedSplit{std::move(bags),  std::move(a),       std::move(b),
                      std::move(seen),  std::move(unseen),  std::move(unseen_table),
                      std::move(test_a), test.labels()};
}

SharedSpace learn_shared_space(const EncodedSplit& split, Eigen::Index rank, double eta,
                               const FitConfig& fit_config) {
  UrlModel model = fit(split.A, split.B, rank, eta, fit_config);
  Projection pa = solve_rotation(split.A, model.V);
  Projection pb = solve_rotation(split.B, model.V);
  return SharedSpace{std::move(model), std::move(pa), std::move(pb)};
}

PipelineResult recognize_split(const EncodedSplit& split, const SharedSpace& space,
                               const PipelineConfig& config) {
  PipelineResult result;
  result.rank.requested = result.rank.used = space.model.rank();
  PrototypeGallery gallery =
      build_gallery(space.pb, split.unseen_semantics, split.unseen_labels, split.seen_labels);
  const Eigen::MatrixXd test_ur = project(space.pa, split.test_embeddings);

  if (config.adapt) {
    const Eigen::MatrixXd source = project(space.pa, split.A);
    const Eigen::MatrixXd extra = config.transductive ? test_ur : Eigen::MatrixXd();
    AdaptationResult adaptation = tjm_adapt(source, gallery.prototypes(), config.tjm, extra);
    result.mmd_before = adaptation.mmd_before;
    result.mmd_after = adaptation.mmd_after;
    gallery = PrototypeGallery(std::move(adaptation), split.unseen_labels);
  }

  for (Eigen::Index i = 0; i < test_ur.cols(); ++i)
    result.predictions.push_back(
        nearest_prototype(gallery.to_gallery_space(test_ur.col(i)), gallery));
  result.report = evaluate(result.predictions, split.truth);
  return result;
}

PipelineResult run_pipeline(const FeatureBagCorpus& train, const FeatureBagCorpus& test,
                            const SemanticTable& semantics, const PipelineConfig& config) {
  const EncodedSplit split = encode_split(train, test, semantics, config);
  const RankChoice rank = resolve_rank(split.A, split.B, config);

  PipelineResult result;
  if (config.method == Method::cca) {
    const Eigen::Index dim = std::min(rank.used, std::min(split.A.rows(), split.B.rows()));
    const CcaModel cca = fit_cca(split.A, split.B, dim);
    const PrototypeGallery gallery(cca.project_b(split.unseen_semantics.embeddings()),
                                   split.unseen_labels);
    const Eigen::MatrixXd test_z = cca.project_a(split.test_embeddings);
    for (Eigen::Index i = 0; i < test_z.cols(); ++i)
      result.predictions.push_back(nearest_prototype(test_z.col(i), gallery));
    result.report = evaluate(result.predictions, split.truth);
  } else {
    FitConfig fit_config = config.fit;
    fit_config.seed = config.seed;
    const SharedSpace space = learn_shared_space(split, rank.used, config.eta, fit_config);
    result = recognize_split(split, space, config);
  }
  result.rank = rank;

  auto& r = result.report;
  r.split = "train=" + std::to_string(train.size()) + " videos/" +
            std::to_string(split.seen_labels.size()) + " classes, test=" +
            std::to_string(test.size()) + " videos/" + std::to_string(split.unseen_labels.size()) +
            " classes, " + (config.transductive ? "transductive" : "inductive");
  r.seed = config.seed;
  r.hyperparams = {{"method", method_name(config.method)},
                   {"bags_per_class", std::to_string(config.bags_per_class)},
                   {"k_nn", std::to_string(config.k_nn)},
                   {"rank", std::to_string(rank.used)},
                   {"eta", format_double(config.eta)},
                   {"adapt", config.adapt ? "true" : "false"},
                   {"tjm_lambda", format_double(config.tjm.lambda)}};
  if (result.mmd_before) r.hyperparams.emplace_back("mmd_before", format_double(*result.mmd_before));
  if (result.mmd_after) r.hyperparams.emplace_back("mmd_after", format_double(*result.mmd_after));
  return result;
}

std::vector<int> furthest_hops(const SemanticTable& semantics,
                               const std::vector<std::vector<int>>& hops, int held_out,
                               int count) {
  if (held_out < 0 || held_out >= static_cast<int>(hops.size()))
    throw StructuralError("held-out hop index out of range");
  std::vector<Eigen::VectorXd> centres;
  for (const auto& hop : hops) {
    if (hop.empty()) throw StructuralError("hop with no classes");
    centres.push_back(semantics.columns(hop).rowwise().mean());
  }
  std::vector<std::pair<double, int>> order;
  for (int h = 0; h < static_cast<int>(hops.size()); ++h)
    if (h != held_out)
      order.emplace_back((centres[static_cast<std::size_t>(h)] -
                          centres[static_cast<std::size_t>(held_out)]).norm(), h);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<int> out;
  for (int i = 0; i < count && i < static_cast<int>(order.size()); ++i)
    out.push_back(order[static_cast<std::size_t>(i)].second);
  return out;
}

CvResult cross_validate(const FeatureBagCorpus& corpus, const SemanticTable& semantics,
                        const std::vector<std::vector<int>>& hops, const CvGrid& grid,
                        const PipelineConfig& config) {
  if (hops.size() < 5)
    throw StructuralError("cross-validation needs at least 5 hops, got " +
                          std::to_string(hops.size()));
  if (grid.etas.empty() || grid.lambdas.empty()) throw ConfigError("cross-validation grid is empty");
  std::set<int> used;
  const auto present = corpus.present_labels();
  for (const auto& hop : hops)
    for (int label : hop) {
      if (!std::binary_search(present.begin(), present.end(), label))
        throw StructuralError("hop class " + std::to_string(label) + " has no videos");
      if (!used.insert(label).second)
        throw StructuralError("class " + std::to_string(label) + " belongs to two hops");
    }

  CvResult result;
  const auto n_points = grid.etas.size() * grid.lambdas.size();
  result.grid.resize(n_points);
  for (std::size_t e = 0; e < grid.etas.size(); ++e)
    for (std::size_t l = 0; l < grid.lambdas.size(); ++l) {
      auto& p = result.grid[e * grid.lambdas.size() + l];
      p.eta = grid.etas[e];
      p.lambda = grid.lambdas[l];
    }

  for (int fold = 0; fold < static_cast<int>(hops.size()); ++fold) {
    const auto training_hops = furthest_hops(semantics, hops, fold);
    result.training_hops.push_back(training_hops);

    std::vector<int> train_classes;
    for (int h : training_hops)
      train_classes.insert(train_classes.end(), hops[static_cast<std::size_t>(h)].begin(),
                           hops[static_cast<std::size_t>(h)].end());
    std::sort(train_classes.begin(), train_classes.end());
    std::vector<int> val_classes = hops[static_cast<std::size_t>(fold)];
    std::sort(val_classes.begin(), val_classes.end());

    std::vector<int> all_classes = train_classes;
    all_classes.insert(all_classes.end(), val_classes.begin(), val_classes.end());
    std::vector<std::string> names;
    for (int c : all_classes) names.push_back(semantics.names().at(static_cast<std::size_t>(c - 1)));
    const SemanticTable fold_semantics(semantics.columns(all_classes), names);
    const auto train = relabel(corpus, train_classes, 1,
                               std::vector<std::string>(names.begin(), names.begin() +
                                                        static_cast<std::ptrdiff_t>(train_classes.size())));
    const auto val = relabel(corpus, val_classes, static_cast<int>(train_classes.size()) + 1, names);

    const EncodedSplit split = encode_split(train, val, fold_semantics, config);
    const RankChoice rank = resolve_rank(split.A, split.B, config);
    FitConfig fit_config = config.fit;
    fit_config.seed = config.seed;
    for (std::size_t e = 0; e < grid.etas.size(); ++e) {
      const SharedSpace space = learn_shared_space(split, rank.used, grid.etas[e], fit_config);
      for (std::size_t l = 0; l < grid.lambdas.size(); ++l) {
        PipelineConfig point = config;
        point.eta = grid.etas[e];
        point.tjm.lambda = grid.lambdas[l];
        auto run = recognize_split(split, space, point);
        run.report.split = "hop " + std::to_string(fold) + " held out";
        run.report.seed = config.seed;
        run.report.hyperparams = {{"eta", format_double(point.eta)},
                                  {"tjm_lambda", format_double(point.tjm.lambda)},
                                  {"rank", std::to_string(rank.used)}};
        result.grid[e * grid.lambdas.size() + l].fold_reports.push_back(std::move(run.report));
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 0; i < n_points; ++i) {
    auto& p = result.grid[i];
    double sum = 0.0;
    for (const auto& r : p.fold_reports) sum += r.accuracy;
    p.mean_accuracy = sum / static_cast<double>(p.fold_reports.size());
    const auto& b = result.grid[best];
    if (i == 0) continue;
    if (p.mean_accuracy > b.mean_accuracy ||
        (p.mean_accuracy == b.mean_accuracy &&
         (p.eta < b.eta || (p.eta == b.eta && p.lambda < b.lambda))))
      best = i;
  }
  result.best_eta = result.grid[best].eta;
  result.best_tjm = config.tjm;
  result.best_tjm.lambda = result.grid[best].lambda;
  result.fold_reports = result.grid[best].fold_reports;
  return result;
}

}  // namespace urlearn
