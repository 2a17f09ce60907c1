#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace lf {

using NodeId = std::uint32_t;

// Bad input or bad configuration. The CLI maps this to exit code 2;
// everything else that escapes is a runtime error (exit code 3).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// 64-bit FNV-1a. Used for content hashes in manifests and stage caches.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t hash_file(const std::string& path);
std::string to_hex(std::uint64_t x);

// splitmix64 step: advances state, returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic fan-out of one seed into independent per-stage / per-index
// streams. Same (seed, tag) always yields the same derived seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Uniform integer in [0, n) by rejection. std::uniform_int_distribution is
// not portable across standard libraries; this is, for any URBG returning
// full 64-bit words.
template <class Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t r = (std::uint64_t{0} - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = rng();
    if (r == 0 || x < std::uint64_t{0} - r) return x % n;
  }
}

// Uniform double in [0, 1) with 53 random bits.
template <class Rng>
double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// k distinct values from [0, n), ascending. Floyd's algorithm: O(k) memory,
// so k can be drawn from a range far too large to materialize.
template <class Rng>
std::vector<std::uint64_t> sample_without_replacement(Rng& rng, std::uint64_t n,
                                                      std::uint64_t k) {
  if (k > n) throw ValidationError("cannot draw " + std::to_string(k) +
                                   " distinct values from a range of " + std::to_string(n));
  std::unordered_set<std::uint64_t> picked;
  picked.reserve(static_cast<std::size_t>(k) * 2);
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t t = uniform_below(rng, j + 1);
    if (!picked.insert(t).second) picked.insert(j);
  }
  std::vector<std::uint64_t> out(picked.begin(), picked.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Seeded Fisher-Yates permutation of [0, n).
template <class Rng>
std::vector<std::uint64_t> shuffled_indices(Rng& rng, std::uint64_t n) {
  std::vector<std::uint64_t> idx(n);
  for (std::uint64_t i = 0; i < n; ++i) idx[i] = i;
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = uniform_below(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

unsigned resolve_threads(unsigned requested, std::size_t work_items);

// Static contiguous partition of [0, n) across workers; fn(begin, end) per
// worker. Workers must write disjoint output slots only, which keeps results
// independent of the thread count. Exceptions propagate to the caller.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace lf
