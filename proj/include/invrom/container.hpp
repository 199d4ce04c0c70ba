#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace invrom {

/// File-format errors, one type per failure class. All derive from IoError so
/// callers may catch the family or the specific kind.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadMagicError : IoError {
    using IoError::IoError;
};
struct TruncatedError : IoError {
    using IoError::IoError;
};
struct BadDtypeError : IoError {
    using IoError::IoError;
};
struct BadHeaderError : IoError {
    using IoError::IoError;
};

/// Shared on-disk container layout: 8-byte ASCII magic, u32 little-endian
/// header length, UTF-8 JSON header text, then f64 little-endian payload.
void write_container(const std::string& path, const std::string& magic,
                     const nlohmann::json& header, const std::vector<double>& payload);

/// Reads and validates a container. Throws BadMagicError when the file's
/// magic differs from `magic`, TruncatedError when the payload is shorter
/// than expected, BadHeaderError on malformed JSON.
void read_container(const std::string& path, const std::string& magic,
                    nlohmann::json& header_out, std::vector<double>& payload_out);

/// Reads just the 8-byte magic (for format dispatch).
std::string peek_magic(const std::string& path);

}  // namespace invrom
