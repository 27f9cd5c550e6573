#pragma once

#include <cstdint>
#include <random>

namespace lmboot {

/// Deterministic, splittable random stream.
///
/// A stream is identified by a 64-bit key. `fork(tag, index)` derives a child
/// key by hashing; the derivation is a pure function of the parent key, so a
/// tree of streams can be handed out to concurrent workers without any
/// shared state. `engine()` materializes a generator seeded from the key.
class RngStream {
 public:
  /// Tags keep children used for different purposes apart.
  enum class Tag : std::uint64_t {
    kCell = 1,
    kReplication = 2,
    kSimulation = 3,
    kEstimator = 4,
    kIteration = 5,
    kDraw = 6,
    kRetry = 7,
  };

  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  RngStream fork(Tag tag, std::uint64_t index) const {
    RngStream child;
    child.key_ = mix(key_ ^ mix(static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ULL + index));
    return child;
  }

  std::uint64_t key() const noexcept { return key_; }

  std::mt19937_64 engine() const {
    std::seed_seq seq{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
    return std::mt19937_64(seq);
  }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
};

}  // namespace lmboot
