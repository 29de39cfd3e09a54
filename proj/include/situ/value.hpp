#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace situ {

/// Opaque typed value carried by state items, knowledge items and message
/// content. Objects keep their keys sorted, so `dump()` is canonical.
using Value = nlohmann::json;

/// Named-value set. Names are unique by construction.
using Items = std::map<std::string, Value>;

/// Template read shared by the environment state repository and an agent's
/// current knowledge. A null template value matches any value under that
/// name; anything else is an equality constraint.
Items matchTemplate(const Items& repository, const Items& templ);

/// Canonical one-line text for an item set (sorted keys, compact JSON).
std::string canonicalText(const Items& items);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a. Used for trace hashing and stream derivation, so it has to
/// be stable across platforms (std::hash is not).
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t hash = kFnvOffset) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

/// SplitMix64 generator. `stream(seed, key)` derives an independent stream
/// from the root seed and a key without consuming any parent state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static SplitMix64 stream(std::uint64_t seed, std::string_view key) {
    SplitMix64 mixer(seed ^ fnv1a64(key));
    return SplitMix64(mixer.next());
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1) with 53 bits of precision.
  double nextUnit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t state_;
};

}  // namespace situ
