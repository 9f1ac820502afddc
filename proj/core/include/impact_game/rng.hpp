#pragma once

#include <cstdint>

namespace impact {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for run `run_id` under `root`; depends only on the pair.
inline std::uint64_t child_seed(std::uint64_t root, std::uint64_t run_id) {
  return splitmix64(splitmix64(root) ^ splitmix64(run_id + 0xD1B54A32D192ED03ULL));
}

// Independent stream `stream` inside one run.
inline std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t stream) {
  return splitmix64(run_seed ^ splitmix64(stream * 0x9E3779B97F4A7C15ULL + 1));
}

}  // namespace impact
