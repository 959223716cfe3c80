#pragma once

#include <cstdint>

namespace pbrl {

/// Sub-seed derivation. A run's global seed fans out into independent
/// streams: sub = splitmix64(splitmix64(global ^ tag) + index). Changing one
/// stream's consumer (e.g. the plant) never shifts another (e.g. weight init).
enum class SeedStream : std::uint64_t {
  kPlantNoise = 0x706c616e74ULL,  // "plant"
  kWeather = 0x77656174ULL,       // "weat"
  kInit = 0x696e6974ULL,          // "init"
  kSampling = 0x73616d70ULL,      // "samp"
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t global, SeedStream stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(global ^ static_cast<std::uint64_t>(stream)) + index);
}

}  // namespace pbrl
