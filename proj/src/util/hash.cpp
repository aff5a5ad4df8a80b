#include "rtcm/util/hash.hpp"

#include <cstdio>
#include <string>

namespace rtcm::util {

Fnv1a& Fnv1a::update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
        state_ ^= static_cast<std::uint64_t>(b);
        state_ *= 0x100000001b3ULL;
    }
    return *this;
}

Fnv1a& Fnv1a::update(std::string_view text) {
    return update(std::as_bytes(std::span(text.data(), text.size())));
}

Fnv1a& Fnv1a::update_u64(std::uint64_t value) {
    std::byte bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::byte>((value >> (8 * i)) & 0xff);
    return update(std::span<const std::byte>(bytes, 8));
}

std::uint64_t fnv1a(std::string_view text) { return Fnv1a{}.update(text).digest(); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace rtcm::util
