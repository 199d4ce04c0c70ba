#include "invrom/container.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian; big-endian hosts unsupported");

namespace invrom {

void write_container(const std::string& path, const std::string& magic,
                     const nlohmann::json& header, const std::vector<double>& payload) {
    if (magic.size() != 8) throw BadMagicError("magic must be 8 bytes: " + magic);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    const std::string head = header.dump();
    const std::uint32_t len = (std::uint32_t)head.size();
    f.write(magic.data(), 8);
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(head.data(), (std::streamsize)head.size());
    f.write(reinterpret_cast<const char*>(payload.data()),
            (std::streamsize)(payload.size() * sizeof(double)));
    if (!f) throw IoError("short write: " + path);
}

void read_container(const std::string& path, const std::string& magic,
                    nlohmann::json& header_out, std::vector<double>& payload_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    char m[8];
    if (!f.read(m, 8)) throw TruncatedError("file shorter than magic: " + path);
    if (std::string(m, 8) != magic)
        throw BadMagicError("expected magic " + magic + " got " + std::string(m, 8) +
                            " in " + path);
    std::uint32_t len = 0;
    if (!f.read(reinterpret_cast<char*>(&len), 4))
        throw TruncatedError("missing header length: " + path);
    std::string head(len, '\0');
    if (!f.read(head.data(), len)) throw TruncatedError("truncated header: " + path);
    try {
        header_out = nlohmann::json::parse(head);
    } catch (const nlohmann::json::parse_error& e) {
        throw BadHeaderError("bad header JSON in " + path + ": " + e.what());
    }

    // Read the rest of the file as f64 payload.
    const auto data_begin = f.tellg();
    f.seekg(0, std::ios::end);
    const auto data_end = f.tellg();
    f.seekg(data_begin);
    const std::size_t bytes = (std::size_t)(data_end - data_begin);
    if (bytes % sizeof(double) != 0)
        throw TruncatedError("payload not a whole number of f64 values: " + path);
    payload_out.resize(bytes / sizeof(double));
    if (!f.read(reinterpret_cast<char*>(payload_out.data()), (std::streamsize)bytes))
        throw TruncatedError("truncated payload: " + path);
}

std::string peek_magic(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    char m[8];
    if (!f.read(m, 8)) throw TruncatedError("file shorter than magic: " + path);
    return std::string(m, 8);
}

}  // namespace invrom
