#include "urlearn/recognize.hpp"

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "json.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

constexpr const char* kAdaptationPrefix = "adaptation.";

void check_labels(const std::vector<int>& labels, Eigen::Index columns) {
  if (static_cast<Eigen::Index>(labels.size()) != columns)
    throw StructuralError("gallery has " + std::to_string(columns) + " prototypes but " +
                          std::to_string(labels.size()) + " labels");
  std::set<int> seen;
  for (int label : labels)
    if (!seen.insert(label).second)
      throw StructuralError("gallery label " + std::to_string(label) + " appears twice");
}

Eigen::MatrixXd labels_row(const std::vector<int>& labels) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = labels[i];
  return row;
}

std::vector<int> labels_from_row(const Eigen::MatrixXd& row) {
  if (row.rows() != 1 && row.size() > 0) throw StructuralError("gallery labels must be a row");
  std::vector<int> labels;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const double v = row(0, i);
    if (v != std::floor(v)) throw StructuralError("gallery label is not an integer");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

}  // namespace

PrototypeGallery::PrototypeGallery(Eigen::MatrixXd prototypes, std::vector<int> labels)
    : prototypes_(std::move(prototypes)), labels_(std::move(labels)) {
  check_labels(labels_, prototypes_.cols());
}

PrototypeGallery::PrototypeGallery(AdaptationResult adaptation, std::vector<int> labels)
    : prototypes_(adaptation.adapted_prototypes), labels_(std::move(labels)),
      adaptation_(std::move(adaptation)) {
  check_labels(labels_, prototypes_.cols());
}

Eigen::VectorXd PrototypeGallery::to_gallery_space(const Eigen::VectorXd& ur_point) const {
  if (adaptation_) return adaptation_->map(ur_point);
  if (ur_point.size() != prototypes_.rows())
    throw StructuralError("point has length " + std::to_string(ur_point.size()) +
                          ", gallery prototypes have " + std::to_string(prototypes_.rows()));
  return ur_point;
}

MatrixBundle PrototypeGallery::to_bundle() const {
  MatrixBundle b;
  b.set_meta("kind", "gallery");
  b.set_meta("adapted", adapted() ? "true" : "false");
  b.set_matrix("prototypes", prototypes_);
  b.set_matrix("labels", labels_row(labels_));
  if (adaptation_) {
    const MatrixBundle inner = adaptation_->to_bundle();
    for (const auto& [name, value] : inner.matrix_entries())
      b.set_matrix(kAdaptationPrefix + name, value);
  }
  return b;
}

PrototypeGallery PrototypeGallery::from_bundle(const MatrixBundle& b) {
  if (!b.has_meta("kind") || b.meta("kind") != "gallery")
    throw StructuralError("bundle is not a prototype gallery");
  auto labels = labels_from_row(b.matrix("labels"));
  if (b.has_meta("adapted") && b.meta("adapted") == "true") {
    MatrixBundle inner;
    inner.set_meta("kind", "adaptation");
    const std::string prefix = kAdaptationPrefix;
    for (const auto& [name, value] : b.matrix_entries())
      if (name.rfind(prefix, 0) == 0) inner.set_matrix(name.substr(prefix.size()), value);
    return PrototypeGallery(AdaptationResult::from_bundle(inner), std::move(labels));
  }
  return PrototypeGallery(b.matrix("prototypes"), std::move(labels));
}

PrototypeGallery build_gallery(const Projection& pb, const SemanticTable& unseen_semantics,
                               const std::vector<int>& labels,
                               const std::vector<int>& seen_labels) {
  if (static_cast<int>(labels.size()) != unseen_semantics.size())
    throw StructuralError("build_gallery: " + std::to_string(unseen_semantics.size()) +
                          " semantic columns but " + std::to_string(labels.size()) + " labels");
  const std::set<int> seen(seen_labels.begin(), seen_labels.end());
  for (int label : labels)
    if (seen.count(label))
      throw StructuralError("build_gallery: unseen label " + std::to_string(label) +
                            " is also a seen label");
  return PrototypeGallery(project(pb, unseen_semantics.embeddings()), labels);
}

int nearest_prototype(const Eigen::VectorXd& point, const PrototypeGallery& gallery) {
  if (gallery.size() == 0) throw StructuralError("predict: empty gallery");
  if (point.size() != gallery.dim())
    throw StructuralError("predict: point has length " + std::to_string(point.size()) +
                          ", gallery prototypes have " + std::to_string(gallery.dim()));
  const auto& protos = gallery.prototypes();
  const auto& labels = gallery.labels();
  int best_label = labels[0];
  double best = (protos.col(0) - point).squaredNorm();
  for (Eigen::Index j = 1; j < protos.cols(); ++j) {
    const double d = (protos.col(j) - point).squaredNorm();
    const int label = labels[static_cast<std::size_t>(j)];
    if (d < best || (d == best && label < best_label)) {
      best = d;
      best_label = label;
    }
  }
  return best_label;
}

int predict(const Projection& pa, const EmbeddingVector& a_hat, const PrototypeGallery& gallery) {
  if (gallery.size() == 0) throw StructuralError("predict: empty gallery");
  return nearest_prototype(gallery.to_gallery_space(project(pa, a_hat.values)), gallery);
}

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.size() != truth.size())
    throw StructuralError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw StructuralError("evaluate: no samples");

  std::set<int> all(truth.begin(), truth.end());
  all.insert(predictions.begin(), predictions.end());
  EvalReport r;
  r.labels.assign(all.begin(), all.end());
  std::map<int, Eigen::Index> index;
  for (std::size_t i = 0; i < r.labels.size(); ++i) index[r.labels[i]] = static_cast<Eigen::Index>(i);

  const auto k = static_cast<Eigen::Index>(r.labels.size());
  r.confusion = Eigen::MatrixXi::Zero(k, k);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion(index[truth[i]], index[predictions[i]]);
    if (truth[i] == predictions[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  for (Eigen::Index i = 0; i < k; ++i) {
    const int support = r.confusion.row(i).sum();
    if (support == 0) continue;
    r.per_class.push_back({r.labels[static_cast<std::size_t>(i)], support,
                           static_cast<double>(r.confusion(i, i)) / support});
  }
  return r;
}

std::string to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  auto per_class = nlohmann::ordered_json::object();
  for (const auto& c : report.per_class)
    per_class[std::to_string(c.label)] = {{"accuracy", c.accuracy}, {"support", c.support}};
  j["per_class"] = per_class;
  auto counts = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < report.confusion.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) row.push_back(report.confusion(i, c));
    counts.push_back(row);
  }
  j["confusion"] = {{"labels", report.labels}, {"counts", counts}};
  j["split"] = report.split;
  j["seed"] = report.seed;
  auto hyper = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.hyperparams) hyper[key] = value;
  j["hyperparams"] = hyper;
  return j.dump(indent);
}

}  // namespace urlearn
