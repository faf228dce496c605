#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace releff {

// Counter-based generator: the i-th draw of a stream is mix(key + i * gamma),
// so a stream is fully determined by its key and streams never share state.
// Keys are derived by hashing a (seed, index, index, ...) path.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : Stream(seed) {
    for (auto p : path) key_ = derive(key_, p);
  }

  Stream child(std::uint64_t index) const {
    Stream s(*this);
    s.key_ = derive(key_, index);
    s.counter_ = 0;
    return s;
  }

  result_type operator()() { return mix(key_ + (counter_++) * kGamma); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
    return mix(mix(key) ^ mix(index + 0x3c6ef372fe94f82bULL));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace releff
