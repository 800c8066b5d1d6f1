// Copyright 2026 The lcvbandit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LCVBANDIT_RNG_HPP_
#define LCVBANDIT_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace lcv {

// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hashes an ordered tuple of words into a child seed. Used to address
// independent streams by (base_seed, run, policy, role, ...).
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t w : words) {
    h = mix64(h ^ mix64(w + 0x9E3779B97F4A7C15ULL));
  }
  return h;
}

/// Counter-based generator addressed by (seed, stream_id).
///
/// Output n of a stream is mix64(key + (n + 1) * golden), where the key is a
/// hash of (seed, stream_id). Identical addresses replay identical sequences;
/// distinct addresses land on unrelated keys, so two streams overlap only if
/// their keys differ by a multiple of the golden gamma inside the consumed
/// range (probability ~ draws / 2^64). Values are cheap to copy and are meant
/// to be owned by exactly one consumer.
///
/// Satisfies std::uniform_random_bit_generator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  constexpr RngStream() noexcept : RngStream(0, 0) {}
  constexpr RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_id_(stream_id), key_(derive_seed({seed, stream_id})) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  // Uniform on [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // A new stream whose address is derived from this one and `child`.
  constexpr RngStream split(std::uint64_t child) const noexcept {
    return RngStream(derive_seed({seed_, stream_id_, child}), child);
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t stream_id() const noexcept { return stream_id_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  friend constexpr bool operator==(const RngStream&, const RngStream&) = default;

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lcv

#endif  // LCVBANDIT_RNG_HPP_
