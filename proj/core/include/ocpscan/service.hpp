#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include "ocpscan/instruction_stream.hpp"
#include "ocpscan/scorer.hpp"

namespace ocpscan {

/// Content-addressed on-disk store for uploaded binaries and the latest
/// analysis result of each. Stored bytes are never rewritten.
class BinaryStore {
 public:
  explicit BinaryStore(std::filesystem::path root);

  /// Lower-case hex SHA-256 of `bytes`.
  static std::string content_id(std::span<const std::uint8_t> bytes);
  static bool is_valid_id(const std::string& id);

  /// Stores the bytes (no-op if already present) and returns their id.
  std::string put(std::span<const std::uint8_t> bytes);
  std::shared_ptr<const BinaryImage> get(const std::string& id);

  void put_result(const std::string& id, const std::string& resultJson);
  std::optional<std::string> get_result(const std::string& id) const;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path binary_path(const std::string& id) const;
  std::filesystem::path result_path(const std::string& id) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const BinaryImage>> cache_;
};

/// $OCPSCAN_STORAGE_DIR, or ./ocpscan-store when unset.
std::filesystem::path default_storage_dir();

struct ServiceConfig {
  std::filesystem::path storageDir = default_storage_dir();
  std::size_t maxUploadBytes = std::size_t{64} << 20;
  unsigned workerThreads = 8;
  ScoreOptions scoring{1};
};

/// HTTP front end:
///   GET  /health
///   POST /binaries                          multipart field "file" or raw body
///   GET  /binaries/{id}
///   POST /binaries/{id}/analyze             AnalysisParams JSON
///   POST /binaries/{id}/sweep               {"parameter", "values", "topN", "params"}
///   GET  /binaries/{id}/candidates/{k}/graph?format=dot|json
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving yet; returns false if the port is taken.
  bool bind(const std::string& host, int port);
  /// Binds an ephemeral port and returns it, or -1.
  int bind_to_any_port(const std::string& host);
  /// Serves until stop() is called.
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ocpscan
