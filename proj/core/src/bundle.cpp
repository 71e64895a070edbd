#include "urlearn/bundle.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"
#include "urlearn/error.hpp"

namespace urlearn {

namespace {

template <typename Entries>
auto find_entry(Entries& entries, const std::string& key) {
  return std::find_if(entries.begin(), entries.end(),
                      [&](const auto& e) { return e.first == key; });
}

}  // namespace

void MatrixBundle::set_meta(const std::string& key, std::string value) {
  auto it = find_entry(meta_, key);
  if (it != meta_.end()) {
    it->second = std::move(value);
  } else {
    meta_.emplace_back(key, std::move(value));
  }
}

void MatrixBundle::set_matrix(const std::string& name, Eigen::MatrixXd value) {
  auto it = find_entry(matrices_, name);
  if (it != matrices_.end()) {
    it->second = std::move(value);
  } else {
    matrices_.emplace_back(name, std::move(value));
  }
}

void MatrixBundle::set_scalar(const std::string& name, double value) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = value;
  set_matrix(name, std::move(m));
}

bool MatrixBundle::has_meta(const std::string& key) const {
  return find_entry(meta_, key) != meta_.end();
}

bool MatrixBundle::has_matrix(const std::string& name) const {
  return find_entry(matrices_, name) != matrices_.end();
}

const std::string& MatrixBundle::meta(const std::string& key) const {
  auto it = find_entry(meta_, key);
  if (it == meta_.end()) throw StructuralError("bundle has no metadata key '" + key + "'");
  return it->second;
}

const Eigen::MatrixXd& MatrixBundle::matrix(const std::string& name) const {
  auto it = find_entry(matrices_, name);
  if (it == matrices_.end()) throw StructuralError("bundle has no matrix '" + name + "'");
  return it->second;
}

double MatrixBundle::scalar(const std::string& name) const {
  const auto& m = matrix(name);
  if (m.size() != 1) throw StructuralError("bundle entry '" + name + "' is not a scalar");
  return m(0, 0);
}

void MatrixBundle::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  detail::LeWriter w(out);
  w.bytes("URLM");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(meta_.size()));
  for (const auto& [key, value] : meta_) {
    w.u32(static_cast<std::uint32_t>(key.size()));
    w.bytes(key);
    w.u32(static_cast<std::uint32_t>(value.size()));
    w.bytes(value);
  }
  w.u32(static_cast<std::uint32_t>(matrices_.size()));
  for (const auto& [name, m] : matrices_) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

MatrixBundle MatrixBundle::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  detail::LeReader r(in, path.string());

  if (r.bytes(4, "magic") != "URLM") r.fail("bad magic, expected URLM");
  const auto version = r.u32("version");
  if (version != kVersion) r.fail("unsupported bundle version " + std::to_string(version));

  MatrixBundle bundle;
  const auto n_meta = r.u32("metadata count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto key = r.bytes(r.u32("key length"), "key");
    auto value = r.bytes(r.u32("value length"), "value");
    bundle.meta_.emplace_back(std::move(key), std::move(value));
  }
  const auto n_mats = r.u32("matrix count");
  for (std::uint32_t i = 0; i < n_mats; ++i) {
    auto name = r.bytes(r.u32("name length"), "matrix name");
    const auto rows = r.u32("rows");
    const auto cols = r.u32("cols");
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t row = 0; row < rows; ++row)
      for (std::uint32_t col = 0; col < cols; ++col) m(row, col) = r.f64("matrix payload");
    bundle.matrices_.emplace_back(std::move(name), std::move(m));
  }
  if (!r.at_end()) r.fail("trailing bytes after last matrix");
  return bundle;
}

}  // namespace urlearn
