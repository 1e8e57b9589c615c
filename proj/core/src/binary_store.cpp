#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ocpscan/error.hpp"
#include "ocpscan/service.hpp"

namespace ocpscan {

namespace fs = std::filesystem;

BinaryStore::BinaryStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
}

std::string BinaryStore::content_id(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string id;
  id.reserve(length * 2);
  for (unsigned i = 0; i < length; ++i) {
    id.push_back(kDigits[digest[i] >> 4]);
    id.push_back(kDigits[digest[i] & 0xF]);
  }
  return id;
}

bool BinaryStore::is_valid_id(const std::string& id) {
  if (id.size() != 64) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

fs::path BinaryStore::binary_path(const std::string& id) const { return root_ / (id + ".bin"); }
fs::path BinaryStore::result_path(const std::string& id) const {
  return root_ / (id + ".analysis.json");
}

std::string BinaryStore::put(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error("empty image");
  const std::string id = content_id(bytes);
  std::lock_guard lock(mutex_);
  const fs::path path = binary_path(id);
  if (!fs::exists(path)) {
    // Write then rename so readers never observe a partial file.
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
  }
  return id;
}

std::shared_ptr<const BinaryImage> BinaryStore::get(const std::string& id) {
  if (!is_valid_id(id)) return nullptr;
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  const fs::path path = binary_path(id);
  if (!fs::exists(path)) return nullptr;
  auto image = std::make_shared<BinaryImage>(load_image(path));
  image->path = id;
  cache_.emplace(id, image);
  return image;
}

void BinaryStore::put_result(const std::string& id, const std::string& resultJson) {
  std::lock_guard lock(mutex_);
  const fs::path path = result_path(id);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << resultJson;
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<std::string> BinaryStore::get_result(const std::string& id) const {
  if (!is_valid_id(id)) return std::nullopt;
  std::lock_guard lock(mutex_);
  std::ifstream in(result_path(id), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

fs::path default_storage_dir() {
  if (const char* dir = std::getenv("OCPSCAN_STORAGE_DIR"); dir && *dir) return dir;
  return fs::current_path() / "ocpscan-store";
}

}  // namespace ocpscan
