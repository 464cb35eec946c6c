#include "loadcast/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "loadcast/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace loadcast {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'P', 'T'};

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("truncated checkpoint file: " + path);
    return v;
}

}  // namespace

void write_block_file(const std::string& path, const BlockFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    put<std::uint32_t>(out, BlockFile::kFormatVersion);
    put<std::uint8_t>(out, file.kind);
    put<std::uint64_t>(out, file.catalog_hash);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(file.dims.size()));
    for (std::uint32_t d : file.dims) put<std::uint32_t>(out, d);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(file.blocks.size()));
    for (const auto& [name, m] : file.blocks) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(float) * m.size()));
    }
    if (!out) throw Error("failed writing checkpoint: " + path);
}

BlockFile read_block_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("not a checkpoint file: " + path);
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != BlockFile::kFormatVersion) {
        throw ParseError("unsupported checkpoint format_version in " + path);
    }
    BlockFile file;
    file.kind = get<std::uint8_t>(in, path);
    file.catalog_hash = get<std::uint64_t>(in, path);
    const auto ndims = get<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < ndims; ++i) {
        file.dims.push_back(get<std::uint32_t>(in, path));
    }
    const auto nblocks = get<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < nblocks; ++i) {
        const auto name_len = get<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rows = get<std::uint32_t>(in, path);
        const auto cols = get<std::uint32_t>(in, path);
        Eigen::MatrixXf m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(float) * m.size()));
        if (!in) throw ParseError("truncated checkpoint file: " + path);
        file.blocks.emplace_back(std::move(name), std::move(m));
    }
    return file;
}

}  // namespace loadcast
