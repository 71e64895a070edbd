#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "urlearn/adapt.hpp"
#include "urlearn/bundle.hpp"
#include "urlearn/features.hpp"
#include "urlearn/gmil.hpp"
#include "urlearn/pipeline.hpp"
#include "urlearn/procrustes.hpp"
#include "urlearn/recognize.hpp"
#include "urlearn/url.hpp"

namespace urlearn::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Provenance ----------------------------------------------------------------

void stamp(MatrixBundle& b, const RunConfig& c, Command command) {
  b.set_meta("command", command_name(command));
  b.set_meta("config_hash", c.raw.hash_hex());
  b.set_meta("config", c.raw.canonical_text());
}

std::vector<std::string> provenance_comments(const RunConfig& c, Command command) {
  std::vector<std::string> lines{std::string("command: ") + command_name(command),
                                 "config_hash: " + c.raw.hash_hex()};
  for (const auto& [k, v] : c.raw.entries()) lines.push_back("config: " + k + "=" + v);
  return lines;
}

void add_provenance(json& j, const RunConfig& c, Command command) {
  j["command"] = command_name(command);
  j["config_hash"] = c.raw.hash_hex();
  json cfg = json::object();
  for (const auto& [k, v] : c.raw.entries()) cfg[k] = v;
  j["config"] = cfg;
}

// Files ---------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::vector<std::string> read_class_names(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class-name list " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty()) throw StructuralError("class-name list " + path.string() + " is empty");
  return names;
}

FeatureBagCorpus read_corpus(const fs::path& path) {
  return load_corpus(path, corpus_format_for(path));
}

MatrixBundle load_kind(const fs::path& path, const std::string& kind) {
  auto b = MatrixBundle::load(path);
  if (!b.has_meta("kind") || b.meta("kind") != kind)
    throw StructuralError(path.string() + " is not a " + kind + " bundle");
  return b;
}

Eigen::MatrixXd labels_row(const std::vector<int>& labels) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = labels[i];
  return row;
}

std::vector<int> row_labels(const Eigen::MatrixXd& row) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < row.size(); ++i) out.push_back(static_cast<int>(row(0, i)));
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// Encoded views ---------------------------------------------------------------

struct Encoded {
  Eigen::MatrixXd A, B, test_embeddings;
  std::vector<int> seen_labels, unseen_labels, truth;
  Eigen::MatrixXd unseen_semantics;
  std::vector<std::string> unseen_names;

  SemanticTable unseen_table() const { return SemanticTable(unseen_semantics, unseen_names); }
};

Encoded load_encoded(const fs::path& path) {
  const auto b = load_kind(path, "encoded");
  Encoded e;
  e.A = b.matrix("A");
  e.B = b.matrix("B");
  e.test_embeddings = b.matrix("test_embeddings");
  e.seen_labels = row_labels(b.matrix("seen_labels"));
  e.unseen_labels = row_labels(b.matrix("unseen_labels"));
  e.truth = row_labels(b.matrix("truth"));
  e.unseen_semantics = b.matrix("unseen_semantics");
  e.unseen_names = split_lines(b.meta("unseen_names"));
  if (e.A.cols() != e.B.cols() || e.test_embeddings.rows() != e.A.rows() ||
      static_cast<Eigen::Index>(e.truth.size()) != e.test_embeddings.cols())
    throw StructuralError(path.string() + ": encoded views have inconsistent shapes");
  return e;
}

struct Model {
  Projection pa, pb;
};

Model load_model(const fs::path& path) {
  const auto b = load_kind(path, "url_model");
  return Model{Projection(b.matrix("P_A")), Projection(b.matrix("P_B"))};
}

// Commands ------------------------------------------------------------------

void cmd_synth(const RunConfig& c, std::ostream& out) {
  const auto data = synthesize_corpus(c.synth);
  save_corpus(data.seen, c.out_dir / "train.urlc", CorpusFormat::binary);
  save_corpus(data.unseen, c.out_dir / "test.urlc", CorpusFormat::binary);
  save_word_vectors(data.semantics, c.out_dir / "semantics.txt");
  write_text(c.out_dir / "classes.txt", join(data.semantics.names(), '\n') + "\n");

  json j;
  add_provenance(j, c, Command::synth);
  j["files"] = {{"train_corpus", "train.urlc"},
                {"test_corpus", "test.urlc"},
                {"semantics", "semantics.txt"},
                {"class_names", "classes.txt"}};
  j["mixing"] = matrix_json(data.truth.mixing);
  j["shift_direction"] = matrix_json(data.truth.shift_direction.transpose());
  write_text(c.out_dir / "synth.json", j.dump(2) + "\n");

  out << "synth: " << data.seen.size() << " seen videos (" << data.seen.num_classes()
      << " classes), " << data.unseen.size() << " unseen videos ("
      << c.synth.unseen_classes << " classes) -> " << c.out_dir.string() << "\n";
}

void cmd_encode(const RunConfig& c, std::ostream& out) {
  const auto names = read_class_names(c.class_names);
  const auto train = read_corpus(c.train_corpus);
  const auto test = read_corpus(c.test_corpus);
  for (const auto* corpus : {&train, &test})
    if (corpus->num_classes() > static_cast<int>(names.size()))
      throw StructuralError("corpus uses class id " + std::to_string(corpus->num_classes()) +
                            " but only " + std::to_string(names.size()) + " class names are listed");
  const auto semantics = load_word_vectors(c.semantics, names);
  const auto split = encode_split(train, test, semantics, c.pipeline);

  auto bags = split.bags.to_bundle();
  stamp(bags, c, Command::encode);
  bags.save(c.out_dir / "bags.urlm");

  MatrixBundle b;
  b.set_meta("kind", "encoded");
  b.set_meta("unseen_names", join(split.unseen_semantics.names(), '\n'));
  stamp(b, c, Command::encode);
  b.set_matrix("A", split.A);
  b.set_matrix("B", split.B);
  b.set_matrix("test_embeddings", split.test_embeddings);
  b.set_matrix("seen_labels", labels_row(split.seen_labels));
  b.set_matrix("unseen_labels", labels_row(split.unseen_labels));
  b.set_matrix("truth", labels_row(split.truth));
  b.set_matrix("unseen_semantics", split.unseen_semantics.embeddings());
  b.save(c.out_dir / "encoded.urlm");

  out << "encode: A " << split.A.rows() << "x" << split.A.cols() << ", B " << split.B.rows()
      << "x" << split.B.cols() << ", " << split.test_embeddings.cols() << " test videos -> "
      << (c.out_dir / "encoded.urlm").string() << "\n";
}

void cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto e = load_encoded(c.encoded);
  const auto rank = resolve_rank(e.A, e.B, c.pipeline);
  if (rank.clamped())
    err << "warning: basis size " << rank.requested << " reduced to " << rank.used
        << " (limited by min(M_1, M_2, N) - 1 and the rank of each view)\n";
  const auto model = fit(e.A, e.B, rank.used, c.pipeline.eta, c.pipeline.fit);
  const auto pa = solve_rotation(e.A, model.V);
  const auto pb = solve_rotation(e.B, model.V);

  auto b = to_bundle(model);
  stamp(b, c, Command::fit);
  b.set_scalar("rank_requested", static_cast<double>(rank.requested));
  b.set_matrix("P_A", pa.matrix());
  b.set_matrix("P_B", pb.matrix());
  b.save(c.out_dir / "model.urlm");
  write_loss_trace_csv(model, c.out_dir / "loss_trace.csv", provenance_comments(c, Command::fit));

  out << "fit: D=" << rank.used << ", " << model.iterations << " iterations"
      << (model.converged ? " (converged)" : "") << ", loss " << fmt(model.loss_trace.front().total)
      << " -> " << fmt(model.loss_trace.back().total) << " -> "
      << (c.out_dir / "model.urlm").string() << "\n";
}

void cmd_gallery(const RunConfig& c, std::ostream& out) {
  const auto e = load_encoded(c.encoded);
  const auto m = load_model(c.model);
  const auto g = build_gallery(m.pb, e.unseen_table(), e.unseen_labels, e.seen_labels);
  auto b = g.to_bundle();
  stamp(b, c, Command::gallery);
  b.save(c.out_dir / "gallery.urlm");
  out << "gallery: " << g.size() << " prototypes in " << g.dim() << " dimensions -> "
      << (c.out_dir / "gallery.urlm").string() << "\n";
}

void cmd_adapt(const RunConfig& c, std::ostream& out) {
  const auto e = load_encoded(c.encoded);
  const auto m = load_model(c.model);
  const auto g = PrototypeGallery::from_bundle(load_kind(c.gallery, "gallery"));
  if (g.adapted()) throw StructuralError(c.gallery.string() + " is already adapted");
  const Eigen::MatrixXd source = project(m.pa, e.A);
  const Eigen::MatrixXd extra =
      c.pipeline.transductive ? project(m.pa, e.test_embeddings) : Eigen::MatrixXd();
  auto result = tjm_adapt(source, g.prototypes(), c.pipeline.tjm, extra);

  auto rb = result.to_bundle();
  stamp(rb, c, Command::adapt);
  rb.save(c.out_dir / "adaptation.urlm");
  const PrototypeGallery adapted(result, g.labels());
  auto gb = adapted.to_bundle();
  stamp(gb, c, Command::adapt);
  gb.save(c.out_dir / "gallery_adapted.urlm");

  json j;
  add_provenance(j, c, Command::adapt);
  j["mmd_before"] = result.mmd_before;
  j["mmd_after"] = result.mmd_after;
  j["bandwidth"] = result.bandwidth;
  j["out_dim"] = result.transform.cols();
  j["mode"] = c.pipeline.transductive ? "transductive" : "inductive";
  write_text(c.out_dir / "adapt.json", j.dump(2) + "\n");

  out << "adapt: mmd " << fmt(result.mmd_before) << " -> " << fmt(result.mmd_after)
      << ", D'=" << result.transform.cols() << " -> "
      << (c.out_dir / "gallery_adapted.urlm").string() << "\n";
}

void cmd_predict(const RunConfig& c, std::ostream& out) {
  const auto e = load_encoded(c.encoded);
  const auto m = load_model(c.model);
  const auto g = PrototypeGallery::from_bundle(load_kind(c.gallery, "gallery"));
  const Eigen::MatrixXd ur = project(m.pa, e.test_embeddings);

  std::ostringstream csv;
  for (const auto& line : provenance_comments(c, Command::predict)) csv << "# " << line << "\n";
  csv << "index,truth,prediction\n";
  int correct = 0;
  for (Eigen::Index i = 0; i < ur.cols(); ++i) {
    const int p = nearest_prototype(g.to_gallery_space(ur.col(i)), g);
    const int t = e.truth[static_cast<std::size_t>(i)];
    correct += p == t;
    csv << i << "," << t << "," << p << "\n";
  }
  write_text(c.out_dir / "predictions.csv", csv.str());
  out << "predict: " << ur.cols() << " videos, " << correct << " correct"
      << (g.adapted() ? " (adapted gallery)" : "") << " -> "
      << (c.out_dir / "predictions.csv").string() << "\n";
}

void cmd_eval(const RunConfig& c, std::ostream& out) {
  std::ifstream in(c.predictions);
  if (!in) throw IoError("cannot open predictions " + c.predictions.string());
  std::vector<int> truth, pred;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "index,truth,prediction")
        throw ParseError(c.predictions.string() + ":" + std::to_string(line_no) +
                         ": expected header index,truth,prediction");
      header = true;
      continue;
    }
    int idx = 0, t = 0, p = 0;
    char c1 = 0, c2 = 0;
    std::istringstream row(line);
    if (!(row >> idx >> c1 >> t >> c2 >> p) || c1 != ',' || c2 != ',' || !(row >> std::ws).eof())
      throw ParseError(c.predictions.string() + ":" + std::to_string(line_no) +
                       ": malformed prediction row");
    truth.push_back(t);
    pred.push_back(p);
  }
  if (!header) throw ParseError(c.predictions.string() + ": missing header");

  auto report = evaluate(pred, truth);
  report.split = c.predictions.filename().string();
  report.seed = c.seed;
  for (const char* key : {"bags_per_class", "k_nn", "basis", "rank", "eta", "tol", "max_iter",
                          "adapt", "mode", "tjm.lambda", "tjm.bandwidth", "tjm.out_dim",
                          "tjm.iterations"})
    report.hyperparams.emplace_back(key, c.raw.get(key));

  json j = json::parse(to_json(report));
  add_provenance(j, c, Command::eval);
  write_text(c.out_dir / "report.json", j.dump(2) + "\n");
  out << "eval: accuracy " << fmt(report.accuracy) << " over " << truth.size() << " videos -> "
      << (c.out_dir / "report.json").string() << "\n";
}

void cmd_cv(const RunConfig& c, std::ostream& out) {
  const auto names = read_class_names(c.class_names);
  const auto corpus = read_corpus(c.train_corpus);
  if (corpus.num_classes() > static_cast<int>(names.size()))
    throw StructuralError("corpus uses more classes than the class-name list provides");
  const auto semantics = load_word_vectors(c.semantics, names);

  auto hops = c.cv_hops;
  if (hops.empty()) {
    const auto labels = corpus.present_labels();
    const std::size_t groups = 5;
    if (labels.size() < groups)
      throw StructuralError("cross-validation needs at least 5 classes to form hops");
    for (std::size_t g = 0; g < groups; ++g) {
      const auto lo = g * labels.size() / groups, hi = (g + 1) * labels.size() / groups;
      hops.emplace_back(labels.begin() + static_cast<std::ptrdiff_t>(lo),
                        labels.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  const auto result = cross_validate(corpus, semantics, hops, c.cv_grid, c.pipeline);

  json j;
  add_provenance(j, c, Command::cv);
  j["best_eta"] = result.best_eta;
  j["best_tjm_lambda"] = result.best_tjm.lambda;
  j["hops"] = hops;
  json grid = json::array();
  for (const auto& p : result.grid)
    grid.push_back({{"eta", p.eta}, {"tjm_lambda", p.lambda}, {"mean_accuracy", p.mean_accuracy}});
  j["grid"] = grid;
  json folds = json::array();
  for (std::size_t f = 0; f < result.fold_reports.size(); ++f)
    folds.push_back({{"held_out_hop", f},
                     {"training_hops", result.training_hops[f]},
                     {"report", json::parse(to_json(result.fold_reports[f]))}});
  j["folds"] = folds;
  write_text(c.out_dir / "cv.json", j.dump(2) + "\n");
  out << "cv: best eta " << fmt(result.best_eta) << ", tjm lambda " << fmt(result.best_tjm.lambda)
      << " over " << hops.size() << " hops -> " << (c.out_dir / "cv.json").string() << "\n";
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  static const std::pair<const char*, Command> table[] = {
      {"synth", Command::synth},     {"encode", Command::encode}, {"fit", Command::fit},
      {"gallery", Command::gallery}, {"adapt", Command::adapt},   {"predict", Command::predict},
      {"eval", Command::eval},       {"cv", Command::cv}};
  for (const auto& [n, c] : table)
    if (name == n) return c;
  return std::nullopt;
}

const char* command_name(Command command) {
  switch (command) {
    case Command::synth: return "synth";
    case Command::encode: return "encode";
    case Command::fit: return "fit";
    case Command::gallery: return "gallery";
    case Command::adapt: return "adapt";
    case Command::predict: return "predict";
    case Command::eval: return "eval";
    case Command::cv: return "cv";
  }
  return "?";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::io:
    case ErrorKind::parse:
    case ErrorKind::structural:
    case ErrorKind::lookup: return 3;
    case ErrorKind::degeneracy: return 4;
  }
  return 1;
}

int run(Command command, const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.out_dir.string());
    switch (command) {
      case Command::synth: cmd_synth(config, out); break;
      case Command::encode: cmd_encode(config, out); break;
      case Command::fit: cmd_fit(config, out, err); break;
      case Command::gallery: cmd_gallery(config, out); break;
      case Command::adapt: cmd_adapt(config, out); break;
      case Command::predict: cmd_predict(config, out); break;
      case Command::eval: cmd_eval(config, out); break;
      case Command::cv: cmd_cv(config, out); break;
    }
    return 0;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error (internal): " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Universal representation learning for unseen action recognition", "urlearn"};
  std::string command;
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  app.add_option("command", command, "synth | encode | fit | gallery | adapt | predict | eval | cv")
      ->required();
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--set", sets, "override a configuration key (key=value)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error (config): " << e.what() << "\n";
    return 2;
  }

  const auto cmd = parse_command(command);
  if (!cmd) {
    err << "error (config): unknown command '" << command << "'\n";
    return 2;
  }
  RunConfig config;
  try {
    ConfigMap raw;
    if (!config_path.empty()) raw.load_file(config_path);
    for (const auto& s : sets) raw.apply(s);
    if (seed) raw.set("seed", std::to_string(*seed));
    config = RunConfig::from(raw, out_dir);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return run(*cmd, config, out, err);
}

}  // namespace urlearn::cli
