#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrr/types.hpp"

namespace lrr::io {

std::string sha256_hex(std::span<const std::byte> bytes);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

/// Raw little-endian float64, column-major.
std::vector<std::byte> encode_f64(const Matrix& m);
Matrix decode_f64(std::span<const std::byte> bytes, Index rows, Index cols, const std::string& name);

/// Little-endian float32 promoted to double.
Matrix decode_f32(std::span<const std::byte> bytes, Index rows, Index cols, const std::string& name);

/// Writes to a sibling temporary file, then renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);

/// A scratch directory next to `target` that replaces it on commit().
/// Removed on destruction if never committed.
class StagingDirectory {
 public:
  explicit StagingDirectory(std::filesystem::path target);
  ~StagingDirectory();
  StagingDirectory(const StagingDirectory&) = delete;
  StagingDirectory& operator=(const StagingDirectory&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

std::string shortest_repr(double v);

}  // namespace lrr::io
