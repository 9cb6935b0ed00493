#include "cosd/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace cosd {

std::string_view to_string(Stance s) {
  switch (s) {
    case Stance::Favor:
      return "FAVOR";
    case Stance::None:
      return "NONE";
    case Stance::Against:
      return "AGAINST";
    case Stance::Unknown:
      return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::optional<Stance> parse_stance(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "FAVOR" || up == "ARGUMENT_FOR") return Stance::Favor;
  if (up == "NONE" || up == "NOARGUMENT") return Stance::None;
  if (up == "AGAINST" || up == "ARGUMENT_AGAINST") return Stance::Against;
  if (up == "UNKNOWN") return Stance::Unknown;
  return std::nullopt;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) {
  std::string low(s);
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (low == "train") return Split::Train;
  if (low == "val" || low == "dev" || low == "validation") return Split::Val;
  if (low == "test") return Split::Test;
  return std::nullopt;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error("Rng::below(0)");
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t x = engine_();
    const unsigned __int128 prod = static_cast<unsigned __int128>(x) * bound;
    if (static_cast<std::uint64_t>(prod) >= threshold) {
      return static_cast<std::size_t>(prod >> 64);
    }
  }
}

double Rng::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(t);
  return r * std::cos(t);
}

std::uint64_t Rng::mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cosd
