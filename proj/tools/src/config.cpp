#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "urlearn/error.hpp"

namespace urlearn::cli {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      {"seed", "0"},
      {"train_corpus", ""},
      {"test_corpus", ""},
      {"semantics", ""},
      {"class_names", ""},
      {"encoded", ""},
      {"model", ""},
      {"gallery", ""},
      {"predictions", ""},
      {"synth.seen_classes", "8"},
      {"synth.unseen_classes", "4"},
      {"synth.latent_bags", "3"},
      {"synth.feature_dim", "16"},
      {"synth.semantic_dim", "24"},
      {"synth.min_frames", "8"},
      {"synth.max_frames", "16"},
      {"synth.videos_per_class", "10"},
      {"synth.noise", "0.1"},
      {"synth.semantic_shift", "0"},
      {"bags_per_class", "5"},
      {"k_nn", "200"},
      {"basis", "low"},
      {"rank", "0"},
      {"eta", "1"},
      {"tol", "1e-6"},
      {"max_iter", "1000"},
      {"adapt", "true"},
      {"mode", "inductive"},
      {"tjm.lambda", "1"},
      {"tjm.bandwidth", "auto"},
      {"tjm.out_dim", "auto"},
      {"tjm.iterations", "10"},
      {"cv.etas", "0.01,0.1,1,10"},
      {"cv.lambdas", "0.1,1,10"},
      {"cv.hops", ""},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return value;
}

int get_int(const ConfigMap& m, const std::string& key) { return parse_number<int>(key, m.get(key)); }
double get_double(const ConfigMap& m, const std::string& key) {
  return parse_number<double>(key, m.get(key));
}

bool get_bool(const ConfigMap& m, const std::string& key) {
  const auto& v = m.get(key);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> get_doubles(const ConfigMap& m, const std::string& key) {
  std::vector<double> out;
  for (const auto& part : split(m.get(key), ',')) out.push_back(parse_number<double>(key, part));
  if (out.empty()) throw ConfigError("config key '" + key + "' must list at least one value");
  return out;
}

std::filesystem::path resolve(const ConfigMap& m, const std::string& key,
                              const std::filesystem::path& out_dir, const char* fallback) {
  const auto& v = m.get(key);
  return v.empty() ? out_dir / fallback : std::filesystem::path(v);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ConfigMap::ConfigMap() : values_(defaults()) {}

void ConfigMap::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void ConfigMap::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& ConfigMap::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::string ConfigMap::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string ConfigMap::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

RunConfig RunConfig::from(const ConfigMap& m, const std::filesystem::path& out_dir) {
  RunConfig c;
  c.out_dir = out_dir;
  c.raw = m;
  c.seed = parse_number<std::uint64_t>("seed", m.get("seed"));

  c.train_corpus = resolve(m, "train_corpus", out_dir, "train.urlc");
  c.test_corpus = resolve(m, "test_corpus", out_dir, "test.urlc");
  c.semantics = resolve(m, "semantics", out_dir, "semantics.txt");
  c.class_names = resolve(m, "class_names", out_dir, "classes.txt");
  c.encoded = resolve(m, "encoded", out_dir, "encoded.urlm");
  c.model = resolve(m, "model", out_dir, "model.urlm");
  c.gallery = resolve(m, "gallery", out_dir, "gallery.urlm");
  c.predictions = resolve(m, "predictions", out_dir, "predictions.csv");

  auto& s = c.synth;
  s.seen_classes = get_int(m, "synth.seen_classes");
  s.unseen_classes = get_int(m, "synth.unseen_classes");
  s.latent_bags = get_int(m, "synth.latent_bags");
  s.feature_dim = get_int(m, "synth.feature_dim");
  s.semantic_dim = get_int(m, "synth.semantic_dim");
  s.min_frames = get_int(m, "synth.min_frames");
  s.max_frames = get_int(m, "synth.max_frames");
  s.videos_per_class = get_int(m, "synth.videos_per_class");
  s.noise = get_double(m, "synth.noise");
  s.semantic_shift = get_double(m, "synth.semantic_shift");
  s.seed = c.seed;
  s.validate();

  auto& p = c.pipeline;
  p.seed = c.seed;
  p.bags_per_class = get_int(m, "bags_per_class");
  p.k_nn = get_int(m, "k_nn");
  if (p.bags_per_class < 1) throw ConfigError("bags_per_class must be >= 1");
  if (p.k_nn < 1) throw ConfigError("k_nn must be >= 1");
  const auto& basis = m.get("basis");
  if (basis == "low") p.basis = BasisMode::low;
  else if (basis == "high") p.basis = BasisMode::high;
  else if (basis == "explicit") p.basis = BasisMode::fixed;
  else throw ConfigError("basis must be low, high or explicit, got '" + basis + "'");
  p.rank = get_int(m, "rank");
  if (p.basis == BasisMode::fixed && p.rank < 1)
    throw ConfigError("basis = explicit needs rank >= 1");
  p.eta = get_double(m, "eta");
  if (!(p.eta >= 0.0)) throw ConfigError("eta must be >= 0");
  p.fit.tol = get_double(m, "tol");
  p.fit.max_iter = get_int(m, "max_iter");
  p.fit.seed = c.seed;
  if (!(p.fit.tol >= 0.0) || p.fit.max_iter < 1)
    throw ConfigError("tol must be >= 0 and max_iter >= 1");
  p.adapt = get_bool(m, "adapt");
  const auto& mode = m.get("mode");
  if (mode == "inductive") p.transductive = false;
  else if (mode == "transductive") p.transductive = true;
  else throw ConfigError("mode must be inductive or transductive, got '" + mode + "'");

  p.tjm.lambda = get_double(m, "tjm.lambda");
  if (!(p.tjm.lambda >= 0.0)) throw ConfigError("tjm.lambda must be >= 0");
  if (m.get("tjm.bandwidth") != "auto") {
    p.tjm.kernel_bandwidth = get_double(m, "tjm.bandwidth");
    if (!(*p.tjm.kernel_bandwidth > 0.0)) throw ConfigError("tjm.bandwidth must be > 0");
  }
  if (m.get("tjm.out_dim") != "auto") {
    p.tjm.out_dim = get_int(m, "tjm.out_dim");
    if (*p.tjm.out_dim < 1) throw ConfigError("tjm.out_dim must be >= 1");
  }
  p.tjm.iterations = get_int(m, "tjm.iterations");
  if (p.tjm.iterations < 1) throw ConfigError("tjm.iterations must be >= 1");

  c.cv_grid.etas = get_doubles(m, "cv.etas");
  c.cv_grid.lambdas = get_doubles(m, "cv.lambdas");
  for (const auto& group : split(m.get("cv.hops"), ';')) {
    std::vector<int> hop;
    for (const auto& label : split(group, ',')) hop.push_back(parse_number<int>("cv.hops", label));
    if (hop.empty()) throw ConfigError("cv.hops has an empty group");
    c.cv_hops.push_back(std::move(hop));
  }
  return c;
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::binary;
}

}  // namespace urlearn::cli
