#pragma once

#include <cstdint>

namespace chunklearn {

enum class SubStream : std::uint64_t {
  kGrammar = 0x6772616d6d6172ULL,
  kPolicy = 0x706f6c696379ULL,
};

/// SplitMix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent sub-stream of `base`. Grammar draws and policy
/// draws never share an engine.
constexpr std::uint64_t derive_seed(std::uint64_t base, SubStream stream) {
  return mix_seed(mix_seed(base) ^ static_cast<std::uint64_t>(stream));
}

}  // namespace chunklearn
