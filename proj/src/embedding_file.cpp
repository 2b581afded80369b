#include "wcse/embedding_file.hpp"

#include <cmath>
#include <fstream>

#include "wcse/binary_io.hpp"
#include "wcse/errors.hpp"

namespace wcse {

void write_embeddings(std::ostream& out, const Matrix& m) {
    binary::write_magic(out, "WEMB");
    binary::write_le<std::uint32_t>(out, kEmbeddingVersion);
    binary::write_le<std::uint64_t>(out, m.rows());
    binary::write_le<std::uint64_t>(out, m.cols());
    binary::write_le<std::uint32_t>(out, kElementF32);
    for (double v : m.data()) binary::write_f32(out, static_cast<float>(v));
}

Matrix read_embeddings(std::istream& in) {
    binary::expect_magic(in, "WEMB", "embedding");
    const auto version = binary::read_le<std::uint32_t>(in, "version");
    if (version != kEmbeddingVersion)
        throw FormatError("unsupported embedding file version " + std::to_string(version));
    const auto rows = binary::read_le<std::uint64_t>(in, "row count");
    const auto cols = binary::read_le<std::uint64_t>(in, "dimension");
    const auto type = binary::read_le<std::uint32_t>(in, "element type");
    if (type != kElementF32) throw FormatError("unsupported element type " + std::to_string(type));
    if (rows > (1ULL << 28) || cols > (1ULL << 20) || rows * cols > (1ULL << 30))
        throw FormatError("implausible embedding shape");

    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (double& v : m.data()) {
        v = binary::read_f32(in, "payload");
        if (!std::isfinite(v)) throw FormatError("embedding payload contains a non-finite value");
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("payload longer than rows x dim");
    return m;
}

void save_embeddings(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_embeddings(out, m);
    if (!out) throw FormatError("failed writing " + path);
}

Matrix load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open embedding file " + path);
    return read_embeddings(in);
}

}  // namespace wcse
