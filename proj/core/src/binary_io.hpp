#pragma once

// Little-endian primitive I/O shared by the corpus and bundle formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "urlearn/error.hpp"

namespace urlearn::detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  void put_le(std::uint64_t v, int width) {
    char buf[8];
    for (int i = 0; i < width; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out_.write(buf, width);
  }

  std::ostream& out_;
};

class LeReader {
 public:
  LeReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get_le(4, what)); }
  std::uint64_t u64(const char* what) { return get_le(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(get_le(8, what)); }

  std::string bytes(std::size_t n, const char* what) {
    std::string s(n, '\0');
    if (n > 0 && !in_.read(s.data(), static_cast<std::streamsize>(n))) truncated(what);
    offset_ += n;
    return s;
  }

  std::uint64_t offset() const noexcept { return offset_; }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source_ + ": byte offset " + std::to_string(offset_) + ": " + msg);
  }

 private:
  std::uint64_t get_le(int width, const char* what) {
    unsigned char buf[8];
    if (!in_.read(reinterpret_cast<char*>(buf), width)) truncated(what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    offset_ += static_cast<std::uint64_t>(width);
    return v;
  }

  [[noreturn]] void truncated(const char* what) const {
    fail(std::string("truncated while reading ") + what);
  }

  std::istream& in_;
  std::string source_;
  std::uint64_t offset_ = 0;
};

}  // namespace urlearn::detail
