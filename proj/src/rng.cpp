#include "relic/rng.hpp"

#include "relic/hash.hpp"

namespace relic {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return xxh64(stream, seed);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

}  // namespace relic
