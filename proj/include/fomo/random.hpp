#ifndef FOMO_RANDOM_HPP
#define FOMO_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fomo {

using Rng = std::mt19937_64;

/// Independent stream keyed by (seed, tags...), e.g. derive_rng(seed, {epoch, 7}).
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (auto t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

}  // namespace fomo

#endif  // FOMO_RANDOM_HPP
