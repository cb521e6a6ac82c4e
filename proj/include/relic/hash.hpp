#pragma once

#include <cstdint>
#include <string_view>

namespace relic {

/// XXH64 (xxHash, 64-bit variant) over a byte string.
std::uint64_t xxh64(std::string_view data, std::uint64_t seed = 0);

}  // namespace relic
