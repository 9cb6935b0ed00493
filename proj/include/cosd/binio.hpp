#pragma once

// Little-endian binary helpers shared by the EMB1, LDA1 and CPA1 formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

#include "cosd/common.hpp"

namespace cosd::binio {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  void magic(std::string_view four);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> values);
  void bytes(std::string_view s);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  // Throws ParseError naming `expected` when the first four bytes differ.
  void expect_magic(std::string_view expected);
  std::uint32_t u32();
  std::uint64_t u64();
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::span<double> out);
  std::string bytes(std::size_t n);
  bool at_eof();

 private:
  void read_raw(char* dst, std::size_t n);

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace cosd::binio
