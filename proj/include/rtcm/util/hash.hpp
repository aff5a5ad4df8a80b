#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace rtcm::util {

// 64-bit FNV-1a. Used for config hashes and split fingerprints; not cryptographic.
class Fnv1a {
public:
    Fnv1a& update(std::span<const std::byte> bytes);
    Fnv1a& update(std::string_view text);
    Fnv1a& update_u64(std::uint64_t value);
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view text);

// SplitMix64 finalizer; derives independent per-stream seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

std::string hex64(std::uint64_t value);

}  // namespace rtcm::util
