#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "../error.hpp"
#include "fs_util.hpp"

namespace graphite::server {

/// Key-addressed byte storage. get(put(k, b)) == b.
class BlobStore {
 public:
  virtual ~BlobStore() = default;
  virtual void put(const std::string& key, std::string_view bytes) = 0;
  virtual std::optional<std::string> get(const std::string& key) const = 0;
  virtual bool contains(const std::string& key) const = 0;
};

/// Blobs as files under a root directory. Keys may contain '/' to form
/// sub-directories but no "." or ".." segments.
class DirectoryBlobStore final : public BlobStore {
 public:
  explicit DirectoryBlobStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  void put(const std::string& key, std::string_view bytes) override { write_file_atomic(path_for(key), bytes); }

  std::optional<std::string> get(const std::string& key) const override { return read_file(path_for(key)); }

  bool contains(const std::string& key) const override { return fs::is_regular_file(path_for(key)); }

  const fs::path& root() const noexcept { return root_; }

 private:
  fs::path path_for(const std::string& key) const {
    if (key.empty()) throw ValidationError("empty blob key");
    for (char c : key) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '_' || c == '.' || c == '/';
      if (!ok) throw ValidationError("invalid blob key '" + key + "'");
    }
    fs::path rel(key);
    for (const auto& part : rel) {
      if (part == "." || part == ".." || part.empty()) throw ValidationError("invalid blob key '" + key + "'");
    }
    if (rel.is_absolute()) throw ValidationError("invalid blob key '" + key + "'");
    return root_ / rel;
  }

  fs::path root_;
};

}  // namespace graphite::server
