#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cosd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

// Label order is fixed everywhere: Favor, None, Against. Unknown only appears
// on unlabeled test rows.
enum class Stance : std::uint8_t { Favor = 0, None = 1, Against = 2, Unknown = 3 };

inline constexpr std::size_t kNumStances = 3;
inline constexpr std::array<Stance, kNumStances> kStances{Stance::Favor, Stance::None,
                                                          Stance::Against};

inline constexpr std::size_t index_of(Stance s) { return static_cast<std::size_t>(s); }
inline constexpr Stance stance_at(std::size_t i) { return static_cast<Stance>(i); }

std::string_view to_string(Stance s);
// Accepts FAVOR/NONE/AGAINST in any case, plus the UKP annotation names.
std::optional<Stance> parse_stance(std::string_view s);

enum class Split : std::uint8_t { Train, Val, Test };
std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

// mt19937_64 with distribution code written out, so draws are identical on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // [0, n)
  std::size_t below(std::size_t n);
  double normal();
  // Derives an independent stream, e.g. per trial or per document.
  Rng fork(std::uint64_t salt) { return Rng(mix(engine_() ^ mix(salt))); }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::uint64_t fnv1a(std::string_view s);

}  // namespace cosd
