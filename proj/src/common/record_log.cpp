#include "artsearch/common/record_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

#include <spdlog/spdlog.h>

#include "artsearch/common/binary_io.hpp"
#include "artsearch/common/error.hpp"
#include "artsearch/common/hashing.hpp"

namespace artsearch {
namespace {

constexpr size_t kHeaderSize = 16;
constexpr size_t kFrameSize = 9;

uint32_t frame_crc(uint8_t type, std::span<const uint8_t> payload) {
  return crc32(payload, crc32(std::span(&type, 1)));
}

void write_all(int fd, std::span<const uint8_t> bytes) {
  size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, std::string("write failed: ") + std::strerror(errno));
    }
    done += static_cast<size_t>(n);
  }
}

void fsync_dir(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

}  // namespace

RecordLog::RecordLog(std::filesystem::path path, std::string magic, uint32_t version, Options options,
                     const Visitor& replay)
    : path_(std::move(path)), magic_(std::move(magic)), version_(version), options_(options) {
  if (magic_.size() != 8) throw Error(ErrorCode::kInternal, "record log magic must be 8 bytes");

  if (!std::filesystem::exists(path_)) {
    const auto h = header();
    std::ofstream out(path_, std::ios::binary);
    out.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
    if (!out) throw Error(ErrorCode::kIo, "cannot create record log");
  }

  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open record log");
  const std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < kHeaderSize || std::memcmp(data.data(), magic_.data(), 8) != 0) {
    throw Error(ErrorCode::kFormat, "record log has wrong magic bytes");
  }
  ByteReader header_reader{std::span<const uint8_t>(data).subspan(8, 8)};
  if (header_reader.get<uint32_t>() != version_) {
    throw Error(ErrorCode::kFormat, "record log has unsupported version");
  }

  size_t pos = kHeaderSize;
  while (pos < data.size()) {
    if (data.size() - pos < kFrameSize) break;
    ByteReader frame{std::span<const uint8_t>(data).subspan(pos, kFrameSize)};
    const auto len = frame.get<uint32_t>();
    const auto crc = frame.get<uint32_t>();
    const auto type = frame.get<uint8_t>();
    if (data.size() - pos - kFrameSize < len) break;
    const auto payload = std::span(data).subspan(pos + kFrameSize, len);
    if (frame_crc(type, payload) != crc) break;
    replay(type, payload);
    ++records_;
    pos += kFrameSize + len;
  }

  if (pos < data.size()) {
    truncated_bytes_ = data.size() - pos;
    spdlog::warn("record log: discarding {} bytes of torn tail", truncated_bytes_);
    std::filesystem::resize_file(path_, pos);
  }
  size_ = pos;
  open_for_append();
}

RecordLog::~RecordLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<uint8_t> RecordLog::header() const {
  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const uint8_t*>(magic_.data()), magic_.size()));
  w.put(version_);
  w.put(uint32_t{0});
  return std::move(w.bytes());
}

void RecordLog::open_for_append() {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd_ < 0) throw Error(ErrorCode::kIo, "cannot open record log for append");
}

void RecordLog::append(uint8_t type, std::span<const uint8_t> payload) {
  ByteWriter w;
  w.put(static_cast<uint32_t>(payload.size()));
  w.put(frame_crc(type, payload));
  w.put(type);
  w.put_bytes(payload);
  try {
    write_all(fd_, w.bytes());
    if (options_.sync && ::fdatasync(fd_) != 0) {
      throw Error(ErrorCode::kIo, std::string("fdatasync failed: ") + std::strerror(errno));
    }
  } catch (...) {
    if (::ftruncate(fd_, static_cast<off_t>(size_)) != 0) {
      spdlog::error("record log: rollback truncate failed");
    }
    throw;
  }
  size_ += w.bytes().size();
  ++records_;
}

void RecordLog::rewrite(const std::vector<std::pair<uint8_t, std::vector<uint8_t>>>& records) {
  const auto tmp = path_.string() + ".tmp";
  ByteWriter w;
  w.put_bytes(header());
  for (const auto& [type, payload] : records) {
    w.put(static_cast<uint32_t>(payload.size()));
    w.put(frame_crc(type, payload));
    w.put(type);
    w.put_bytes(payload);
  }
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot create compacted log");
  try {
    write_all(fd, w.bytes());
    if (::fsync(fd) != 0) throw Error(ErrorCode::kIo, "fsync of compacted log failed");
  } catch (...) {
    ::close(fd);
    std::filesystem::remove(tmp);
    throw;
  }
  ::close(fd);
  std::filesystem::rename(tmp, path_);
  fsync_dir(path_.parent_path().empty() ? std::filesystem::path(".") : path_.parent_path());
  ::close(fd_);
  size_ = w.bytes().size();
  records_ = records.size();
  open_for_append();
}

}  // namespace artsearch
