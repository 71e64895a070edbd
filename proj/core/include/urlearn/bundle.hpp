#pragma once

// Versioned binary container for named dense matrices plus string metadata.
//
// Layout (all integers u32 little-endian, payloads f64 little-endian):
//   "URLM" | version=1
//   n_meta  | n_meta x (key_len | key bytes | value_len | value bytes)
//   n_mats  | n_mats x (name_len | name bytes | rows | cols | rows*cols f64, row-major)
//
// Entries keep insertion order so that writing the same content twice
// produces identical bytes.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace urlearn {

class MatrixBundle {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void set_meta(const std::string& key, std::string value);
  void set_matrix(const std::string& name, Eigen::MatrixXd value);
  void set_scalar(const std::string& name, double value);

  bool has_meta(const std::string& key) const;
  bool has_matrix(const std::string& name) const;

  /// Throws StructuralError if absent.
  const std::string& meta(const std::string& key) const;
  const Eigen::MatrixXd& matrix(const std::string& name) const;
  double scalar(const std::string& name) const;

  const std::vector<std::pair<std::string, std::string>>& meta_entries() const { return meta_; }
  const std::vector<std::pair<std::string, Eigen::MatrixXd>>& matrix_entries() const {
    return matrices_;
  }

  void save(const std::filesystem::path& path) const;
  static MatrixBundle load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> matrices_;
};

}  // namespace urlearn
