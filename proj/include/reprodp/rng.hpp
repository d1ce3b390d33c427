// Copyright 2026 the repro-dp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REPRODP_RNG_HPP_
#define REPRODP_RNG_HPP_

#include <cstdint>

namespace reprodp {

// Counter-based RNG. Every variate is a pure function of
// (key, stream, slot), so draws are random-access: banks are prefix-stable
// in R, replicates are independent of evaluation order, and rejection loops
// can consume an unbounded, replayable sub-stream.

namespace rng_detail {

// splitmix64 finalizer (Steele-Lea-Vigna). Full avalanche per round.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace rng_detail

// Hash of the full (key, stream, slot) coordinate; each input word passes
// through at least two finalizer rounds before it can reach the output.
inline constexpr std::uint64_t counter_bits(std::uint64_t key,
                                            std::uint64_t stream,
                                            std::uint64_t slot) {
  using rng_detail::kGolden;
  using rng_detail::mix64;
  std::uint64_t h = mix64(key + kGolden);
  h = mix64((h ^ stream) + 2 * kGolden);
  h = mix64((h ^ slot) + 3 * kGolden);
  return h;
}

// Uniform on the open interval (0,1): 53 mantissa bits, offset by half an
// ulp so 0 and 1 are unreachable (log/quantile transforms stay finite).
inline constexpr double counter_uniform(std::uint64_t key, std::uint64_t stream,
                                        std::uint64_t slot) {
  return (static_cast<double>(counter_bits(key, stream, slot) >> 11) + 0.5) *
         0x1.0p-53;
}

// A (key, stream) pair with random slot access. Copyable, 16 bytes.
class RngStream {
 public:
  constexpr RngStream(std::uint64_t key, std::uint64_t stream)
      : key_(key), stream_(stream) {}

  constexpr double uniform(std::uint64_t slot) const {
    return counter_uniform(key_, stream_, slot);
  }
  constexpr std::uint64_t bits(std::uint64_t slot) const {
    return counter_bits(key_, stream_, slot);
  }
  // Derived stream for a nested purpose (e.g. a rejection loop).
  constexpr RngStream substream(std::uint64_t tag) const {
    return RngStream(key_, rng_detail::mix64(stream_ + tag * rng_detail::kGolden));
  }
  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
};

// Stream-id salts. Streams are namespaced so that no two purposes can
// collide for a given master key.
namespace stream_id {
// Seed bank: stream for repro seed i (i < 2^32).
inline constexpr std::uint64_t bank(std::uint64_t seed_index) {
  return 0x0100000000000000ULL + seed_index;
}
// Observed-data generation in experiments.
inline constexpr std::uint64_t observed() { return 0x0200000000000000ULL; }
// Bootstrap resample b.
inline constexpr std::uint64_t bootstrap(std::uint64_t b) {
  return 0x0300000000000000ULL + b;
}
// Optimizer start-point generation.
inline constexpr std::uint64_t optimizer() { return 0x0400000000000000ULL; }
// Per-seed rejection sub-stream (K-norm proposals etc.).
inline constexpr std::uint64_t rejection(std::uint64_t seed_index) {
  return 0x0500000000000000ULL + seed_index;
}
}  // namespace stream_id

}  // namespace reprodp

#endif  // REPRODP_RNG_HPP_
