// Copyright 2026 The MAGUS Authors
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

#ifndef MAGUS_COMMON_HPP_
#define MAGUS_COMMON_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace magus {

// Dense 0-based identifiers, contiguous per kind.
using WordId = std::uint32_t;
using ItemId = std::uint32_t;
using UserId = std::uint32_t;
using NodeId = std::uint32_t;

inline constexpr std::uint32_t kInvalidId = std::numeric_limits<std::uint32_t>::max();

// Sorted, deduplicated word ids.
using WordSet = std::vector<WordId>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void normalize_word_set(WordSet& words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
}

// Both arguments must be sorted.
inline bool is_subset(std::span<const WordId> small, std::span<const WordId> big) {
  return small.size() <= big.size() &&
         std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline bool shares_word(std::span<const WordId> a, std::span<const WordId> b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return false;
}

inline double logistic(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Log-loss of a logit against a 0/1 label, computed without forming the
// probability so that saturated logits stay finite.
inline double log_loss_from_logit(double logit, double label) {
  const double softplus = logit > 0 ? logit + std::log1p(std::exp(-logit))
                                    : std::log1p(std::exp(logit));
  return softplus - label * logit;
}

// SplitMix64-seeded xoshiro256**. The standard distributions are
// implementation-defined, so every draw used by the library goes through
// the helpers below to keep seeded output identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& s : state_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  // k distinct values from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::uint32_t> sample(std::uint32_t n, std::uint32_t k) {
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    k = std::min(k, n);
    for (std::uint32_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + index(n - i)]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t state_[4];
};

// Little-endian binary helpers shared by the snapshot formats.
namespace binio {

template <typename T>
void write_pod(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error("snapshot truncated");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void write_magic(std::ostream& out, const char (&magic)[5], std::uint32_t version) {
  out.write(magic, 4);
  write_pod<std::uint32_t>(out, version);
}

inline void expect_magic(std::istream& in, const char (&magic)[5], std::uint32_t version) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw Error(std::string("not a ") + magic + " snapshot");
  }
  if (read_pod<std::uint32_t>(in) != version) {
    throw Error(std::string("unsupported ") + magic + " snapshot version");
  }
}

}  // namespace binio

}  // namespace magus

#endif  // MAGUS_COMMON_HPP_
