#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "wcse/errors.hpp"

// Little-endian scalar I/O shared by the checkpoint and embedding formats.
namespace wcse::binary {

template <typename U>
void write_le(std::ostream& out, U value) {
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, sizeof(U));
}

template <typename U>
U read_le(std::istream& in, const char* what) {
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U)))
        throw FormatError(std::string("truncated file while reading ") + what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

inline void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(read_le<std::uint64_t>(in, what));
}
inline void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
inline float read_f32(std::istream& in, const char* what) {
    return std::bit_cast<float>(read_le<std::uint32_t>(in, what));
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }
inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
    char got[4] = {};
    if (!in.read(got, 4) || std::string(got, 4) != std::string(magic, 4))
        throw FormatError(std::string("bad magic: not a ") + what + " file");
}

}  // namespace wcse::binary
