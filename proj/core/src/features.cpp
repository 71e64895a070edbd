#include "urlearn/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

std::vector<std::string> default_class_names(int count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) names.push_back("class_" + std::to_string(k));
  return names;
}

bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

FeatureBagCorpus load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  if (in.peek() == std::char_traits<char>::eof())
    throw StructuralError(path.string() + ": empty corpus file");

  detail::LeReader r(in, path.string());
  if (r.bytes(4, "magic") != "URLC") r.fail("bad magic, expected URLC");
  const auto version = r.u32("version");
  if (version != 1) r.fail("unsupported corpus version " + std::to_string(version));
  const auto n_videos = r.u32("video count");
  const auto dim = r.u32("descriptor dimension");
  if (n_videos == 0) throw StructuralError(path.string() + ": corpus has no videos");
  if (dim == 0) throw StructuralError(path.string() + ": descriptor dimension is 0");

  std::vector<Video> videos;
  videos.reserve(n_videos);
  int max_label = 0;
  for (std::uint32_t v = 0; v < n_videos; ++v) {
    const auto label = r.u32("label");
    const auto frames = r.u32("frame count");
    if (label == 0) r.fail("video " + std::to_string(v + 1) + " has label 0 (labels are 1-based)");
    if (frames == 0)
      throw StructuralError(path.string() + ": video " + std::to_string(v + 1) + " has no frames");
    Video video;
    video.label = static_cast<int>(label);
    video.frames.resize(dim, frames);
    for (std::uint32_t l = 0; l < frames; ++l)
      for (std::uint32_t d = 0; d < dim; ++d) video.frames(d, l) = r.f64("frame payload");
    max_label = std::max(max_label, video.label);
    videos.push_back(std::move(video));
  }
  if (!r.at_end()) r.fail("trailing bytes after last video");
  return FeatureBagCorpus(std::move(videos), default_class_names(max_label));
}

FeatureBagCorpus load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");

  struct Pending {
    int label;
    std::size_t index;
    std::vector<std::vector<double>> frames;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> by_id;
  std::size_t dim = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto content = trim(line);
    if (content.empty()) continue;
    auto fields = split_fields(content, ',');
    const auto where = path.string() + ": line " + std::to_string(line_no);
    if (fields.size() < 3)
      throw ParseError(where + ": expected video_id,label,f_1,...; got " +
                       std::to_string(fields.size()) + " field(s)");
    std::string id(trim(fields[0]));
    if (id.empty()) throw ParseError(where + ": empty video_id");
    double label_value = 0.0;
    if (!parse_double(trim(fields[1]), label_value) || label_value < 1 ||
        label_value != std::floor(label_value))
      throw ParseError(where + ": label '" + std::string(fields[1]) +
                       "' is not a positive integer");
    const int label = static_cast<int>(label_value);

    std::vector<double> frame(fields.size() - 2);
    for (std::size_t k = 2; k < fields.size(); ++k) {
      if (!parse_double(trim(fields[k]), frame[k - 2]))
        throw ParseError(where + ": field " + std::to_string(k + 1) + " ('" +
                         std::string(fields[k]) + "') is not a number");
    }

    auto [it, inserted] = by_id.try_emplace(id, Pending{label, order.size(), {}});
    if (inserted) order.push_back(id);
    auto& pending = it->second;
    const auto video_index = pending.index;
    if (pending.label != label)
      throw StructuralError(where + ": video " + std::to_string(video_index + 1) +
                            " changes label from " + std::to_string(pending.label) + " to " +
                            std::to_string(label));
    if (dim == 0) dim = frame.size();
    if (frame.size() != dim)
      throw StructuralError(where + ": video " + std::to_string(video_index + 1) + ", frame " +
                            std::to_string(pending.frames.size() + 1) + " has dimension " +
                            std::to_string(frame.size()) + ", expected " + std::to_string(dim));
    pending.frames.push_back(std::move(frame));
  }
  if (order.empty()) throw StructuralError(path.string() + ": empty corpus file");

  std::vector<Video> videos;
  videos.reserve(order.size());
  int max_label = 0;
  for (const auto& id : order) {
    auto& pending = by_id.at(id);
    Video video;
    video.label = pending.label;
    video.frames.resize(static_cast<Eigen::Index>(dim),
                        static_cast<Eigen::Index>(pending.frames.size()));
    for (std::size_t l = 0; l < pending.frames.size(); ++l)
      for (std::size_t d = 0; d < dim; ++d)
        video.frames(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(l)) =
            pending.frames[l][d];
    max_label = std::max(max_label, video.label);
    videos.push_back(std::move(video));
  }
  return FeatureBagCorpus(std::move(videos), default_class_names(max_label));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FeatureBagCorpus::FeatureBagCorpus(std::vector<Video> videos,
                                   std::vector<std::string> class_names)
    : videos_(std::move(videos)), class_names_(std::move(class_names)) {
  if (videos_.empty()) throw StructuralError("corpus has no videos");
  dim_ = videos_.front().frames.rows();
  if (dim_ < 1) throw StructuralError("video 1 has zero-dimensional frames");
  const int n_classes = num_classes();
  for (std::size_t v = 0; v < videos_.size(); ++v) {
    const auto& video = videos_[v];
    const auto id = std::to_string(v + 1);
    if (video.frames.cols() < 1) throw StructuralError("video " + id + " has no frames");
    if (video.frames.rows() != dim_)
      throw StructuralError("video " + id + " has dimension " +
                            std::to_string(video.frames.rows()) + ", expected " +
                            std::to_string(dim_));
    if (video.label < 1 || video.label > n_classes)
      throw StructuralError("video " + id + " has label " + std::to_string(video.label) +
                            " outside 1.." + std::to_string(n_classes));
    if (!video.frames.allFinite()) throw StructuralError("video " + id + " has non-finite entries");
  }
}

std::vector<int> FeatureBagCorpus::labels() const {
  std::vector<int> out;
  out.reserve(videos_.size());
  for (const auto& v : videos_) out.push_back(v.label);
  return out;
}

std::vector<int> FeatureBagCorpus::present_labels() const {
  std::set<int> seen;
  for (const auto& v : videos_) seen.insert(v.label);
  return {seen.begin(), seen.end()};
}

FeatureBagCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return format == CorpusFormat::binary ? load_binary(path) : load_csv(path);
}

void save_corpus(const FeatureBagCorpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format) {
  if (format == CorpusFormat::binary) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    detail::LeWriter w(out);
    w.bytes("URLC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(corpus.size()));
    w.u32(static_cast<std::uint32_t>(corpus.dim()));
    for (const auto& video : corpus.videos()) {
      w.u32(static_cast<std::uint32_t>(video.label));
      w.u32(static_cast<std::uint32_t>(video.frames.cols()));
      for (Eigen::Index l = 0; l < video.frames.cols(); ++l)
        for (Eigen::Index d = 0; d < video.frames.rows(); ++d) w.f64(video.frames(d, l));
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (std::size_t v = 0; v < corpus.size(); ++v) {
    const auto& video = corpus.video(v);
    for (Eigen::Index l = 0; l < video.frames.cols(); ++l) {
      out << "v" << (v + 1) << ',' << video.label;
      for (Eigen::Index d = 0; d < video.frames.rows(); ++d)
        out << ',' << format_double(video.frames(d, l));
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SemanticTable::SemanticTable(Eigen::MatrixXd embeddings, std::vector<std::string> names)
    : embeddings_(std::move(embeddings)), names_(std::move(names)) {
  if (static_cast<std::size_t>(embeddings_.cols()) != names_.size())
    throw StructuralError("semantic table has " + std::to_string(embeddings_.cols()) +
                          " columns but " + std::to_string(names_.size()) + " class names");
  if (embeddings_.rows() < 1) throw StructuralError("semantic table has zero-dimensional columns");
  for (Eigen::Index k = 0; k < embeddings_.cols(); ++k) {
    const double norm = embeddings_.col(k).norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance)
      throw StructuralError("semantic column for '" + names_[static_cast<std::size_t>(k)] +
                            "' has norm " + format_double(norm) + ", expected 1");
  }
}

SemanticTable SemanticTable::normalized(Eigen::MatrixXd raw, std::vector<std::string> names) {
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    const double norm = raw.col(k).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      const auto name = static_cast<std::size_t>(k) < names.size()
                            ? names[static_cast<std::size_t>(k)]
                            : std::to_string(k + 1);
      throw DegeneracyError("semantic vector for '" + name + "' cannot be normalised (norm " +
                            format_double(norm) + ")");
    }
    raw.col(k) /= norm;
  }
  return SemanticTable(std::move(raw), std::move(names));
}

Eigen::VectorXd SemanticTable::column(int label) const {
  if (label < 1 || label > size())
    throw StructuralError("label " + std::to_string(label) + " outside semantic table 1.." +
                          std::to_string(size()));
  return embeddings_.col(label - 1);
}

Eigen::MatrixXd SemanticTable::columns(const std::vector<int>& labels) const {
  Eigen::MatrixXd out(dim(), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = column(labels[i]);
  return out;
}

std::vector<std::string> split_class_name(const std::string& name) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : name) {
    if (ch == '_' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

SemanticTable load_word_vectors(const std::filesystem::path& path,
                                const std::vector<std::string>& class_names) {
  if (class_names.empty()) throw StructuralError("no class names given for word-vector lookup");
  std::set<std::string> wanted;
  std::vector<std::vector<std::string>> class_tokens;
  for (const auto& name : class_names) {
    class_tokens.push_back(split_class_name(name));
    wanted.insert(class_tokens.back().begin(), class_tokens.back().end());
  }

  std::ifstream in(path);
  if (!in) throw IoError("cannot open word-vector file '" + path.string() + "'");

  std::map<std::string, Eigen::VectorXd> found;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    const auto where = path.string() + ": line " + std::to_string(line_no);
    const std::size_t width = fields.size() - 1;
    if (width == 0) throw ParseError(where + ": token '" + std::string(fields[0]) + "' has no values");
    if (dim == 0) dim = width;
    if (width != dim)
      throw ParseError(where + ": expected " + std::to_string(dim) + " values, got " +
                       std::to_string(width));
    std::string token(fields[0]);
    if (!wanted.count(token) || found.count(token)) continue;
    Eigen::VectorXd vec(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 1], vec(static_cast<Eigen::Index>(k))))
        throw ParseError(where + ": value '" + std::string(fields[k + 1]) + "' is not a number");
    }
    found.emplace(std::move(token), std::move(vec));
  }
  if (dim == 0) throw StructuralError(path.string() + ": word-vector file is empty");

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(class_names.size()));
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    int hits = 0;
    for (const auto& token : class_tokens[k]) {
      auto it = found.find(token);
      if (it == found.end()) continue;
      raw.col(static_cast<Eigen::Index>(k)) += it->second;
      ++hits;
    }
    if (hits == 0)
      throw LookupError("no word vector found for any token of class '" + class_names[k] + "'");
  }
  return SemanticTable::normalized(std::move(raw), class_names);
}

void save_word_vectors(const SemanticTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (int k = 0; k < table.size(); ++k) {
    out << table.names()[static_cast<std::size_t>(k)];
    for (Eigen::Index d = 0; d < table.dim(); ++d) out << ' ' << format_double(table.embeddings()(d, k));
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace urlearn
