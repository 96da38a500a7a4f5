#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace artsearch {

/// Append-only file of CRC-framed records behind an 8-byte magic and a format
/// version. Layout:
///
///   magic[8] | u32 version | u32 reserved
///   repeated: u32 payload_len | u32 crc32(type, payload) | u8 type | payload
///
/// On open, records are replayed in order. A torn or corrupt tail (short read
/// or CRC mismatch) is truncated away so the next append starts on a clean
/// record boundary. A wrong magic or version throws Error(kFormat).
class RecordLog {
 public:
  struct Options {
    bool sync = true;  // fdatasync after every append
  };

  using Visitor = std::function<void(uint8_t type, std::span<const uint8_t> payload)>;

  RecordLog(std::filesystem::path path, std::string magic, uint32_t version, Options options, const Visitor& replay);
  ~RecordLog();

  RecordLog(const RecordLog&) = delete;
  RecordLog& operator=(const RecordLog&) = delete;

  /// Durable once this returns. On failure the file is rolled back to its
  /// previous length and Error(kIo) is thrown.
  void append(uint8_t type, std::span<const uint8_t> payload);

  /// Atomically replaces the log with the given records (temp file + rename).
  void rewrite(const std::vector<std::pair<uint8_t, std::vector<uint8_t>>>& records);

  size_t record_count() const noexcept { return records_; }
  size_t truncated_bytes() const noexcept { return truncated_bytes_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void open_for_append();
  std::vector<uint8_t> header() const;

  std::filesystem::path path_;
  std::string magic_;
  uint32_t version_;
  Options options_;
  int fd_ = -1;
  uint64_t size_ = 0;
  size_t records_ = 0;
  size_t truncated_bytes_ = 0;
};

}  // namespace artsearch
