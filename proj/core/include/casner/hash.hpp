#ifndef CASNER_HASH_HPP
#define CASNER_HASH_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace casner {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic seed for a per-record RNG stream. Independent of worker
/// scheduling: derived only from the run seed, the record id, and the stream
/// tag (e.g. the round number).
inline std::uint64_t record_stream_seed(std::uint64_t run_seed,
                                        std::string_view record_id,
                                        std::uint64_t tag) {
  return splitmix64(run_seed ^ splitmix64(fnv1a64(record_id)) ^
                    splitmix64(tag * 0x9e3779b97f4a7c15ull));
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace casner

#endif  // CASNER_HASH_HPP
