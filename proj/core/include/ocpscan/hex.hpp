#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ocpscan {

/// Formats `value` as "0x" followed by upper-case hex digits. When
/// `bitWidth` is non-zero the digits are zero padded to cover that many
/// bits, which is how opcodes are printed (0x0C000000 for a 32-bit ISA).
std::string to_hex(std::uint64_t value, unsigned bitWidth = 0);

/// Parses a non-negative integer written in decimal or with a 0x prefix.
/// Throws ocpscan::Error on malformed input or overflow.
std::uint64_t parse_uint(std::string_view text);

}  // namespace ocpscan
