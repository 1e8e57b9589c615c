#include "ocpscan/instruction_stream.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include "ocpscan/error.hpp"

namespace ocpscan {

std::string_view to_string(Endianness e) { return e == Endianness::big ? "big" : "little"; }

Endianness parse_endianness(std::string_view text) {
  if (text == "big") return Endianness::big;
  if (text == "little") return Endianness::little;
  throw Error("endianness must be \"big\" or \"little\", got \"" + std::string(text) + "\"");
}

BinaryImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image: " + path.string());
  BinaryImage image;
  image.path = path.string();
  image.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failed: " + path.string());
  if (image.bytes.empty()) throw Error("empty image: " + path.string());
  return image;
}

InstructionStream::InstructionStream(std::vector<std::uint64_t> values, DecodeLayout layout,
                                     std::size_t droppedBytes)
    : values_(std::move(values)), layout_(layout), droppedBytes_(droppedBytes) {}

InstructionStream extract_instructions(const BinaryImage& image, const CodeRegion& region,
                                       const DecodeLayout& layout) {
  std::vector<FieldError> errors;
  const unsigned bits = layout.instructionLength;
  if (bits == 0 || bits % 8 != 0 || bits > 64) {
    errors.push_back({"instructionLength", "must be a multiple of 8 between 8 and 64"});
  }
  if (layout.pcIncPerInstr == 0) errors.push_back({"pcIncPerInstr", "must be at least 1"});
  if (region.fileOffset >= region.fileOffsetEnd) {
    errors.push_back({"fileOffset", "must be smaller than fileOffsetEnd"});
  }
  if (region.fileOffsetEnd > image.size()) {
    errors.push_back({"fileOffsetEnd", "exceeds image size of " + std::to_string(image.size()) +
                                           " bytes"});
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  const std::size_t width = bits / 8;
  const std::size_t count = region.size() / width;
  if (count == 0) {
    throw ValidationError("fileOffsetEnd", "code region is smaller than one instruction");
  }
  const auto maxU64 = std::numeric_limits<std::uint64_t>::max();
  if ((count - 1) != 0 && layout.pcIncPerInstr > (maxU64 - layout.pcOffset) / (count - 1)) {
    throw ValidationError("pcOffset", "address of the last instruction exceeds 2^64-1");
  }

  std::vector<std::uint64_t> values(count);
  const std::uint8_t* p = image.bytes.data() + region.fileOffset;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    std::uint64_t v = 0;
    if (layout.endianness == Endianness::big) {
      for (std::size_t b = 0; b < width; ++b) v = (v << 8) | p[b];
    } else {
      for (std::size_t b = width; b-- > 0;) v = (v << 8) | p[b];
    }
    values[i] = v;
  }
  return InstructionStream(std::move(values), layout, region.size() - count * width);
}

std::vector<std::uint8_t> encode_instructions(std::span<const std::uint64_t> values,
                                              unsigned instructionLength, Endianness endianness) {
  const std::size_t width = instructionLength / 8;
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * width);
  for (std::uint64_t v : values) {
    for (std::size_t b = 0; b < width; ++b) {
      std::size_t shift = endianness == Endianness::big ? (width - 1 - b) * 8 : b * 8;
      out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  return out;
}

}  // namespace ocpscan
