#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wta/error.hpp"

namespace wta::io {

// Little-endian primitive encoding shared by every binary file format.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) fail(ErrorCode::io, "write failed on " + path_.string());
  }
  void magic(std::string_view tag) { bytes(tag.data(), tag.size()); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  void string(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void close() {
    out_.close();
    if (!out_) fail(ErrorCode::io, "close failed on " + path_.string());
  }

 private:
  template <class T>
  void le(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof(T));
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorCode::io, "cannot open " + path.string());
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_) fail(ErrorCode::io, "unexpected end of file in " + path_.string());
  }
  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    bytes(got.data(), got.size());
    if (got != tag) fail(ErrorCode::io, path_.string() + " is not a " + std::string(tag) + " file");
  }
  std::uint16_t u16() { return le<std::uint16_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  void f64s(std::span<double> out) {
    for (double& x : out) x = f64();
  }
  std::string string(std::size_t max_len = 1u << 26) {
    const auto n = u64();
    if (n > max_len) fail(ErrorCode::io, "corrupt string length in " + path_.string());
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  // Guards allocations driven by header fields.
  void check_count(std::uint64_t n, std::uint64_t limit, std::string_view what) {
    if (n > limit) fail(ErrorCode::io, "corrupt " + std::string(what) + " in " + path_.string());
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  template <class T>
  T le() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(buf[i]) << (8 * i));
    return v;
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace wta::io
