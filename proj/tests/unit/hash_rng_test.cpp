#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <string>

#include "relic/hash.hpp"
#include "relic/rng.hpp"

using namespace relic;

// Reference digests from the python xxhash package.
TEST(Xxh64, MatchesReferenceDigests) {
  EXPECT_EQ(xxh64(""), 0xef46db3751d8e999ULL);
  EXPECT_EQ(xxh64("a"), 0xd24ec4f1a98c6e5bULL);
  EXPECT_EQ(xxh64("abc"), 0x44bc2cf5ad770999ULL);
  EXPECT_EQ(xxh64("abc", 1), 0xbea9ca8199328908ULL);
  EXPECT_EQ(xxh64("The quick brown fox jumps over the lazy dog"), 0x0b242d361fda71bcULL);
  EXPECT_EQ(xxh64("ab", 0x52454c4943ULL), 0x4e04db1a649fc871ULL);
}

TEST(Xxh64, LongInputCoversStripeLoop) {
  std::string bytes(100, '\0');
  std::iota(bytes.begin(), bytes.end(), 0);
  EXPECT_EQ(xxh64(bytes, 0x52454c4943ULL), 0x4c27712f0f030622ULL);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(42).next(), Rng(43).next());
}

TEST(Rng, Mt19937_64StandardValue) {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  std::uint64_t v = 0;
  Rng rng(5489u);
  for (int i = 0; i < 10000; ++i) v = rng.next();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, UniformAndBelowInRange) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(9);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(w.begin(), w.end());
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(DeriveSeed, StreamsAreIndependent) {
  EXPECT_EQ(derive_seed(7, "corpus"), derive_seed(7, "corpus"));
  EXPECT_NE(derive_seed(7, "corpus"), derive_seed(7, "shuffle"));
  EXPECT_NE(derive_seed(7, "corpus"), derive_seed(8, "corpus"));
}
