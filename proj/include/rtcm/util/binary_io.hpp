#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rtcm/errors.hpp"

namespace rtcm::util {

// Little-endian IEEE-754 binary32 arrays.
inline void write_f32(std::ostream& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (float v : values) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            char bytes[4];
            for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
            out.write(bytes, 4);
        }
    }
}

inline void read_f32(std::istream& in, std::span<float> values, const std::string& what) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
        if (static_cast<std::size_t>(in.gcount()) != values.size_bytes()) {
            throw IoError(what + ": truncated float array (wanted " + std::to_string(values.size()) + " values)");
        }
    } else {
        for (float& v : values) {
            unsigned char bytes[4];
            in.read(reinterpret_cast<char*>(bytes), 4);
            if (in.gcount() != 4) throw IoError(what + ": truncated float array");
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
            v = std::bit_cast<float>(bits);
        }
    }
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (in.gcount() != 8) throw IoError(what + ": truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace rtcm::util
