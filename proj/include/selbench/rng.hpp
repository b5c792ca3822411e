#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace selbench {

// Deterministic random streams. Every consumer of randomness receives its own
// stream forked from the master seed by a fixed path of ids, so results do not
// depend on evaluation order or thread scheduling. std::mt19937_64 is fully
// specified by the standard; the distribution transforms below are our own
// because the standard library's distributions are not portable across
// implementations.

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw from [0, n). n = 0 is invalid.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % span);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Marsaglia's polar method; one spare value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform_real() - 1.0;
      v = 2.0 * uniform_real() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// A point in the stream tree. Forking by index or label derives a child
// stream; materializing with rng() yields an independent generator. Copying
// is cheap (one word), so streams are passed by value.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(detail::mix64(seed + detail::golden_gamma)) {}

  RngStream fork(std::uint64_t id) const {
    return RngStream(from_state{}, detail::mix64(state_ + detail::golden_gamma * (id + 1)));
  }

  RngStream fork(std::string_view label) const { return fork(detail::fnv1a(label)); }

  Rng rng() const { return Rng(state_); }

 private:
  struct from_state {};
  RngStream(from_state, std::uint64_t s) : state_(s) {}
  std::uint64_t state_;
};

}  // namespace selbench
