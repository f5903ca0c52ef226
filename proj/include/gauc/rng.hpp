#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gauc {

// Every consumer of randomness draws from its own stream, keyed by a name and
// derived from one 64-bit run seed. Adding a new stream never shifts the
// values seen by an existing one.
namespace streams {
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kProposals = "proposals";
inline constexpr std::string_view kSynth = "synth";
inline constexpr std::string_view kProbe = "probe";
inline constexpr std::string_view kBandwidth = "bandwidth";
inline constexpr std::string_view kRandomBaseline = "random-baseline";
inline constexpr std::string_view kPrompts = "prompts";
}  // namespace streams

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
  return splitmix64(splitmix64(seed) ^ fnv1a(name));
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(stream_seed(seed, name));
}

}  // namespace gauc
