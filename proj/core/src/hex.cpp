#include "ocpscan/hex.hpp"

#include <charconv>

#include "ocpscan/error.hpp"

namespace ocpscan {

ValidationError::ValidationError(std::vector<FieldError> fields)
    : Error(summarize(fields)), fields_(std::move(fields)) {}

ValidationError::ValidationError(std::string field, std::string message)
    : ValidationError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}

std::string ValidationError::summarize(const std::vector<FieldError>& fields) {
  std::string out = "invalid parameters";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out += i == 0 ? ": " : "; ";
    out += fields[i].field + ": " + fields[i].message;
  }
  return out;
}

std::string to_hex(std::uint64_t value, unsigned bitWidth) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  unsigned digits = (bitWidth + 3) / 4;
  std::string body;
  do {
    body.insert(body.begin(), kDigits[value & 0xF]);
    value >>= 4;
  } while (value != 0);
  if (body.size() < digits) body.insert(0, digits - body.size(), '0');
  return "0x" + body;
}

std::uint64_t parse_uint(std::string_view original) {
  std::string_view text = original;
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value, base);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw Error("not a non-negative integer: '" + std::string(original) + "'");
  }
  return value;
}

}  // namespace ocpscan
