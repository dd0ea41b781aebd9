#include "djrhr/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace djrhr {

namespace {

const char kMagic[4] = {'D', 'J', 'R', 'H'};

template <typename U>
void write_le(std::ofstream& os, U v) {
    // little-endian host assumed; raw write keeps the format bit-exact
    os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U read_le(std::ifstream& is) {
    U v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(U));
    if (!is) throw CheckpointFormatError("checkpoint truncated");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, kCheckpointVersion);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& [name, tensor] : ckpt.entries) {
        if (name.size() > 0xffff) throw CheckpointError("entry name too long: " + name);
        write_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Dims& d = tensor.dims();
        write_le<std::uint8_t>(os, 4);
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d.n));
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d.c));
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d.h));
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d.w));
        os.write(reinterpret_cast<const char*>(tensor.data()),
                 static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
    }
    if (!os) throw CheckpointError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw CheckpointFormatError("bad checkpoint magic in " + path);
    }
    const auto version = read_le<std::uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw CheckpointVersionError("unsupported checkpoint version " + std::to_string(version) +
                                     " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto count = read_le<std::uint32_t>(is);
    Checkpoint ckpt;
    ckpt.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_le<std::uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw CheckpointFormatError("checkpoint truncated in entry name");
        const auto ndim = read_le<std::uint8_t>(is);
        if (ndim < 1 || ndim > 4) {
            throw CheckpointFormatError("entry '" + name + "' has unsupported rank " +
                                        std::to_string(ndim));
        }
        std::int64_t dims[4] = {1, 1, 1, 1};
        for (int d = 0; d < ndim; ++d) {
            dims[4 - ndim + d] = read_le<std::uint32_t>(is);
        }
        Tensor t(dims[0], dims[1], dims[2], dims[3]);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (!is) {
            throw CheckpointFormatError("entry '" + name + "' shorter than its declared shape");
        }
        ckpt.entries.emplace_back(std::move(name), std::move(t));
    }
    return ckpt;
}

}  // namespace djrhr
