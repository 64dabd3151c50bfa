#pragma once

// Hash-chained, append-only bulletin board stored as a text file.
//
// One record per line:   seq|kind|payload_b64|chain_hex
//
//   chain[seq] = SHA-256( chain[seq-1] | u64be(seq) | kind | 0x00 | payload_b64 )
//   chain[-1]  = 32 zero bytes
//
// The integrity mechanism is this project's choice; any reader can recompute
// the chain from the first line. Writers hold an exclusive flock on the file
// for the read-verify-append cycle. Readers ignore a trailing line that has
// no newline yet (an append in progress).

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpv/bytes.hpp"
#include "bpv/error.hpp"

namespace bpv {

enum class RecordKind { Request, BallotDigest, Tally, Audit, CodePublish, Meta };

constexpr std::string_view to_string(RecordKind k) noexcept {
  switch (k) {
    case RecordKind::Request: return "REQUEST";
    case RecordKind::BallotDigest: return "BALLOT_DIGEST";
    case RecordKind::Tally: return "TALLY";
    case RecordKind::Audit: return "AUDIT";
    case RecordKind::CodePublish: return "CODE_PUBLISH";
    case RecordKind::Meta: return "META";
  }
  return "META";
}

inline std::optional<RecordKind> parse_record_kind(std::string_view s) {
  for (auto k : {RecordKind::Request, RecordKind::BallotDigest, RecordKind::Tally,
                 RecordKind::Audit, RecordKind::CodePublish, RecordKind::Meta}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct BoardRecord {
  std::uint64_t seq = 0;
  RecordKind kind = RecordKind::Meta;
  Bytes payload;
  Digest chain{};

  bool operator==(const BoardRecord&) const = default;
};

inline Digest chain_digest(const Digest& prev, std::uint64_t seq, RecordKind kind,
                           std::string_view payload_b64) {
  std::array<std::uint8_t, 8> be{};
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(seq >> (8 * (7 - i)));
  const std::uint8_t sep = 0;
  return Sha256()
      .update(prev)
      .update(be)
      .update(to_string(kind))
      .update(ByteView(&sep, 1))
      .update(payload_b64)
      .finish();
}

inline std::string format_record(const BoardRecord& r) {
  return std::to_string(r.seq) + "|" + std::string(to_string(r.kind)) + "|" + base64_encode(r.payload) +
         "|" + to_hex(r.chain);
}

struct BoardVerdict {
  std::size_t records = 0;                  ///< records that verified
  std::optional<std::uint64_t> broken_seq;  ///< first record that did not

  bool ok() const noexcept { return !broken_seq.has_value(); }
};

namespace detail {

struct BoardScan {
  std::vector<BoardRecord> records;
  BoardVerdict verdict;
};

/// Splits off complete lines and verifies them in order.
inline BoardScan scan_board(std::string_view text) {
  BoardScan scan;
  Digest prev{};
  std::uint64_t expected = 0;
  std::size_t pos = 0;
  for (;;) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) break;  // partial trailing line is not yet a record
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;

    auto broken = [&] {
      scan.verdict.broken_seq = expected;
      return scan;
    };
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto bar = line.find('|', start);
      fields.push_back(line.substr(start, bar - start));
      if (bar == std::string_view::npos) break;
      start = bar + 1;
    }
    if (fields.size() != 4) return broken();
    if (fields[0] != std::to_string(expected)) return broken();
    auto kind = parse_record_kind(fields[1]);
    if (!kind) return broken();
    BoardRecord rec;
    rec.seq = expected;
    rec.kind = *kind;
    try {
      rec.payload = base64_decode(fields[2]);
      rec.chain = fixed_from_hex<32>(fields[3]);
    } catch (const Error&) {
      return broken();
    }
    if (fields[3] != to_hex(rec.chain)) return broken();  // canonical lowercase only
    if (chain_digest(prev, rec.seq, rec.kind, fields[2]) != rec.chain) return broken();
    prev = rec.chain;
    scan.records.push_back(std::move(rec));
    ++expected;
    ++scan.verdict.records;
  }
  return scan;
}

inline std::string read_file_or_empty(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// RAII file descriptor holding an exclusive flock.
class LockedFile {
 public:
  explicit LockedFile(const std::string& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Errc::IoFailure, "open " + path + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX) != 0) {
      const int err = errno;
      ::close(fd_);
      throw Error(Errc::IoFailure, "flock " + path + ": " + std::strerror(err));
    }
  }
  ~LockedFile() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  LockedFile(const LockedFile&) = delete;
  LockedFile& operator=(const LockedFile&) = delete;

  std::string read_all() const {
    std::string out;
    char buf[1 << 16];
    off_t off = 0;
    for (;;) {
      const ssize_t n = ::pread(fd_, buf, sizeof buf, off);
      if (n < 0) throw Error(Errc::IoFailure, "read " + path_ + ": " + std::strerror(errno));
      if (n == 0) break;
      out.append(buf, static_cast<std::size_t>(n));
      off += n;
    }
    return out;
  }

  void write_all(std::string_view data) const {
    while (!data.empty()) {
      const ssize_t n = ::write(fd_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::IoFailure, "write " + path_ + ": " + std::strerror(errno));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
};

}  // namespace detail

/// File-backed bulletin board. Cheap to construct; every operation reads the
/// file afresh, so several handles (or processes) may share one path.
class Board {
 public:
  explicit Board(std::string path) : path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

  BoardRecord append(RecordKind kind, ByteView payload) {
    const std::pair<RecordKind, Bytes> one{kind, Bytes(payload.begin(), payload.end())};
    return append_batch(std::span(&one, 1)).front();
  }

  BoardRecord append(RecordKind kind, std::string_view payload) { return append(kind, as_bytes(payload)); }

  /// Appends several records under one lock and one chain verification.
  std::vector<BoardRecord> append_batch(std::span<const std::pair<RecordKind, Bytes>> items) {
    detail::LockedFile file(path_);
    const std::string text = file.read_all();
    auto scan = detail::scan_board(text);
    if (!scan.verdict.ok())
      throw Error(Errc::ChainBroken, "board " + path_ + " broken at seq " +
                                         std::to_string(*scan.verdict.broken_seq));
    if (!text.empty() && text.back() != '\n')
      throw Error(Errc::ChainBroken, "board " + path_ + " ends in a partial record");

    Digest prev = scan.records.empty() ? Digest{} : scan.records.back().chain;
    std::uint64_t seq = scan.records.size();
    std::vector<BoardRecord> out;
    std::string chunk;
    for (const auto& [kind, payload] : items) {
      BoardRecord rec{seq++, kind, payload, {}};
      rec.chain = chain_digest(prev, rec.seq, rec.kind, base64_encode(rec.payload));
      prev = rec.chain;
      chunk += format_record(rec) + "\n";
      out.push_back(std::move(rec));
    }
    file.write_all(chunk);
    return out;
  }

  /// Full chain recomputation. A missing file is an empty, valid board.
  BoardVerdict verify() const { return detail::scan_board(detail::read_file_or_empty(path_)).verdict; }

  /// Records up to the first broken one.
  std::vector<BoardRecord> records() const {
    return detail::scan_board(detail::read_file_or_empty(path_)).records;
  }

 private:
  std::string path_;
};

inline BoardRecord board_append(const std::string& path, RecordKind kind, ByteView payload) {
  return Board(path).append(kind, payload);
}

inline BoardVerdict board_verify(const std::string& path) { return Board(path).verify(); }

}  // namespace bpv
