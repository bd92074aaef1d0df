#ifndef DSOM_FINGERPRINT_HPP
#define DSOM_FINGERPRINT_HPP

#include "dsom/core.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dsom {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

/**
 * Content hash of a sample table: SHA-256 over rows, cols, then every value's
 * IEEE-754 bit pattern, all as little-endian 64-bit words, row-major.
 */
template <typename Scalar>
std::string data_fingerprint(const SampleMatrix<Scalar>& samples)
{
    std::vector<unsigned char> bytes;
    bytes.reserve(16 + static_cast<std::size_t>(samples.size()) * 8);
    auto put = [&](std::uint64_t w) {
        for (int k = 0; k < 8; ++k)
            bytes.push_back(static_cast<unsigned char>(w >> (8 * k)));
    };
    put(static_cast<std::uint64_t>(samples.rows()));
    put(static_cast<std::uint64_t>(samples.cols()));
    for (Index r = 0; r < samples.rows(); ++r)
        for (Index c = 0; c < samples.cols(); ++c)
            put(std::bit_cast<std::uint64_t>(static_cast<double>(samples(r, c))));
    return sha256_hex(bytes);
}

} // namespace dsom

#endif // DSOM_FINGERPRINT_HPP
