#include "lrr/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <random>

namespace lrr::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "blob codecs assume a little-endian host");

std::string sha256_hex(std::span<const std::byte> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Io, "sha256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::vector<std::byte> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> buf(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size)))
    fail(ErrorKind::Io, "short read on " + path.string());
  return buf;
}

void write_file(const fs::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed on " + path.string());
}

std::vector<std::byte> encode_f64(const Matrix& m) {
  std::vector<std::byte> out(static_cast<std::size_t>(m.size()) * sizeof(double));
  if (m.size() > 0) std::memcpy(out.data(), m.data(), out.size());
  return out;
}

Matrix decode_f64(std::span<const std::byte> bytes, Index rows, Index cols, const std::string& name) {
  const auto expected = static_cast<std::size_t>(rows * cols) * sizeof(double);
  if (bytes.size() != expected)
    fail(ErrorKind::ShapeMismatch, name + ": expected " + std::to_string(expected) + " bytes for " +
                                       std::to_string(rows) + "x" + std::to_string(cols) +
                                       " float64, found " + std::to_string(bytes.size()));
  Matrix m(rows, cols);
  if (expected > 0) std::memcpy(m.data(), bytes.data(), expected);
  return m;
}

Matrix decode_f32(std::span<const std::byte> bytes, Index rows, Index cols, const std::string& name) {
  const auto expected = static_cast<std::size_t>(rows * cols) * sizeof(float);
  if (bytes.size() != expected)
    fail(ErrorKind::ShapeMismatch, name + ": expected " + std::to_string(expected) + " bytes for " +
                                       std::to_string(rows) + "x" + std::to_string(cols) +
                                       " float32, found " + std::to_string(bytes.size()));
  Eigen::MatrixXf f(rows, cols);
  if (expected > 0) std::memcpy(f.data(), bytes.data(), expected);
  return f.cast<double>();
}

namespace {

fs::path temp_sibling(const fs::path& target) {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  auto name = target.filename().string();
  if (name.empty()) name = target.parent_path().filename().string();
  const auto parent = target.has_filename() ? target.parent_path() : target.parent_path().parent_path();
  return (parent.empty() ? fs::path(".") : parent) / ("." + name + ".tmp-" + std::to_string(gen() % 1000000000ULL));
}

}  // namespace

void write_file_atomic(const fs::path& path, std::span<const std::byte> bytes) {
  const auto tmp = temp_sibling(path);
  write_file(tmp, bytes);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

StagingDirectory::StagingDirectory(fs::path target) : target_(std::move(target)) {
  if (!target_.has_filename()) target_ = target_.parent_path();
  staging_ = temp_sibling(target_);
  std::error_code ec;
  fs::create_directories(staging_, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + staging_.string() + ": " + ec.message());
}

StagingDirectory::~StagingDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagingDirectory::commit() {
  std::error_code ec;
  if (fs::exists(target_)) {
    // Swap the previous content out first so the target is never half-written.
    const auto old = temp_sibling(target_);
    fs::rename(target_, old, ec);
    if (ec) fail(ErrorKind::Io, "cannot replace " + target_.string() + ": " + ec.message());
    fs::rename(staging_, target_, ec);
    if (ec) {
      fs::rename(old, target_);
      fail(ErrorKind::Io, "cannot rename into " + target_.string() + ": " + ec.message());
    }
    fs::remove_all(old, ec);
  } else {
    fs::rename(staging_, target_, ec);
    if (ec) fail(ErrorKind::Io, "cannot rename into " + target_.string() + ": " + ec.message());
  }
  committed_ = true;
}

std::string shortest_repr(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace lrr::io
