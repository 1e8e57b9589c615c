#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ocpscan {

enum class Endianness { big, little };

std::string_view to_string(Endianness e);
/// Accepts "big" or "little"; throws ocpscan::Error otherwise.
Endianness parse_endianness(std::string_view text);

/// Raw bytes of a binary file. No container format is interpreted.
struct BinaryImage {
  std::vector<std::uint8_t> bytes;
  std::string path;

  std::size_t size() const noexcept { return bytes.size(); }
};

/// Reads the whole file. Throws ocpscan::Error if it is missing,
/// unreadable or empty.
BinaryImage load_image(const std::filesystem::path& path);

/// Byte span [fileOffset, fileOffsetEnd) treated as code.
struct CodeRegion {
  std::size_t fileOffset = 0;
  std::size_t fileOffsetEnd = 0;

  std::size_t size() const noexcept { return fileOffsetEnd - fileOffset; }
  friend bool operator==(const CodeRegion&, const CodeRegion&) = default;
};

struct Instruction {
  std::uint64_t value = 0;
  std::size_t index = 0;
  std::uint64_t address = 0;
};

/// How a region is cut into fixed-width words and how addresses are assigned.
struct DecodeLayout {
  unsigned instructionLength = 32;  // bits, multiple of 8, at most 64
  Endianness endianness = Endianness::big;
  std::uint64_t pcOffset = 0;
  std::uint64_t pcIncPerInstr = 1;

  unsigned byteWidth() const noexcept { return instructionLength / 8; }
};

/// Decoded fixed-width instructions. Immutable once built.
class InstructionStream {
 public:
  InstructionStream(std::vector<std::uint64_t> values, DecodeLayout layout,
                    std::size_t droppedBytes = 0);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const std::uint64_t> values() const noexcept { return values_; }
  std::uint64_t value(std::size_t index) const { return values_[index]; }
  std::uint64_t address(std::size_t index) const noexcept {
    return layout_.pcOffset + index * layout_.pcIncPerInstr;
  }
  Instruction at(std::size_t index) const {
    return {values_.at(index), index, address(index)};
  }

  const DecodeLayout& layout() const noexcept { return layout_; }
  unsigned instructionLength() const noexcept { return layout_.instructionLength; }
  std::uint64_t pcOffset() const noexcept { return layout_.pcOffset; }
  std::uint64_t pcIncPerInstr() const noexcept { return layout_.pcIncPerInstr; }
  Endianness endianness() const noexcept { return layout_.endianness; }

  /// Bytes at the end of the region too short to form an instruction.
  std::size_t droppedBytes() const noexcept { return droppedBytes_; }

 private:
  std::vector<std::uint64_t> values_;
  DecodeLayout layout_;
  std::size_t droppedBytes_ = 0;
};

/// Decodes consecutive instructionLength/8 byte groups of `region`.
/// Throws ocpscan::ValidationError naming the offending parameter when
/// the region is out of bounds or holds less than one instruction, the
/// width is not a multiple of 8 in [8, 64], pcIncPerInstr is zero, or the
/// last address would not fit in 64 bits.
InstructionStream extract_instructions(const BinaryImage& image, const CodeRegion& region,
                                       const DecodeLayout& layout);

/// Inverse of extract_instructions: serializes values at the stream width.
std::vector<std::uint8_t> encode_instructions(std::span<const std::uint64_t> values,
                                              unsigned instructionLength, Endianness endianness);

}  // namespace ocpscan
