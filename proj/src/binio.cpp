#include "cosd/binio.hpp"

namespace cosd::binio {

Writer::Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open for writing: " + path.string());
}

void Writer::magic(std::string_view four) { bytes(four.substr(0, 4)); }

void Writer::u32(std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out_.write(buf, 4);
}

void Writer::u64(std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out_.write(buf, 8);
}

void Writer::f64s(std::span<const double> values) {
  for (double v : values) f64(v);
}

void Writer::bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

void Writer::close() {
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
  out_.close();
}

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open: " + path.string());
}

void Reader::read_raw(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw ParseError("unexpected end of file: " + path_.string());
  }
}

void Reader::expect_magic(std::string_view expected) {
  char buf[4] = {0, 0, 0, 0};
  in_.read(buf, 4);
  if (in_.gcount() != 4 || std::string_view(buf, 4) != expected) {
    throw ParseError("bad magic in " + path_.string() + " (expected \"" + std::string(expected) +
                     "\")");
  }
}

std::uint32_t Reader::u32() {
  unsigned char buf[4];
  read_raw(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

std::uint64_t Reader::u64() {
  unsigned char buf[8];
  read_raw(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

void Reader::f64s(std::span<double> out) {
  for (double& v : out) v = f64();
}

std::string Reader::bytes(std::size_t n) {
  std::string s(n, '\0');
  if (n > 0) read_raw(s.data(), n);
  return s;
}

bool Reader::at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace cosd::binio
