#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "wcse/matrix.hpp"

namespace wcse {

// "WEMB" u32 version, u64 rows, u64 cols, u32 element type (1 = f32),
// then rows*cols little-endian f32 values in row-major order.
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kElementF32 = 1;

void write_embeddings(std::ostream& out, const Matrix& m);
// Values are widened to double; non-finite values are rejected.
Matrix read_embeddings(std::istream& in);

void save_embeddings(const std::string& path, const Matrix& m);
Matrix load_embeddings(const std::string& path);

}  // namespace wcse
