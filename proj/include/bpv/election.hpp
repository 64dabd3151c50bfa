#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpv/bytes.hpp"
#include "bpv/error.hpp"

namespace bpv {

using ElectionId = std::array<std::uint8_t, 8>;

inline constexpr std::size_t kMaxParties = 255;
inline constexpr std::size_t kMaxCandidates = 152;

struct Party {
  std::size_t index = 0;
  std::string name;
  std::vector<std::string> candidates;

  bool operator==(const Party&) const = default;
};

namespace detail {

/// Names are stored verbatim in the line-oriented config file, so they must
/// survive a write/read cycle unchanged.
inline bool is_storable_name(std::string_view name) {
  if (name.empty()) return false;
  if (std::isspace(static_cast<unsigned char>(name.front())) ||
      std::isspace(static_cast<unsigned char>(name.back())))
    return false;
  return std::none_of(name.begin(), name.end(),
                      [](char c) { return c == '\n' || c == '\r' || c == '\0'; });
}

}  // namespace detail

/// The election universe every ballot is validated against. Immutable once
/// constructed; the constructor enforces all invariants.
class ElectionConfig {
 public:
  ElectionConfig(ElectionId id, std::string title, std::vector<Party> parties,
                 std::string created_at = {})
      : id_(id),
        title_(std::move(title)),
        parties_(std::move(parties)),
        created_at_(std::move(created_at)) {
    auto fail = [](const std::string& path, const std::string& what) {
      throw Error(Errc::InvariantViolation, path + ": " + what);
    };
    if (parties_.empty() || parties_.size() > kMaxParties)
      fail("parties", "count " + std::to_string(parties_.size()) + " outside 1..=255");
    if (!title_.empty() && !detail::is_storable_name(title_)) fail("title", "not a single trimmed line");
    if (!created_at_.empty() && !detail::is_storable_name(created_at_))
      fail("created_at", "not a single trimmed line");
    for (std::size_t p = 0; p < parties_.size(); ++p) {
      const Party& party = parties_[p];
      const std::string path = "parties[" + std::to_string(p) + "]";
      if (party.index != p) fail(path + ".index", "must equal position " + std::to_string(p));
      if (!detail::is_storable_name(party.name)) fail(path + ".name", "empty or malformed");
      if (party.candidates.empty() || party.candidates.size() > kMaxCandidates)
        fail(path + ".candidates",
             "count " + std::to_string(party.candidates.size()) + " outside 1..=152");
      for (std::size_t c = 0; c < party.candidates.size(); ++c) {
        if (!detail::is_storable_name(party.candidates[c]))
          fail(path + ".candidates[" + std::to_string(c) + "]", "empty or malformed");
      }
    }
  }

  /// Builds parties from (name, candidates) pairs, assigning dense indices.
  static ElectionConfig make(ElectionId id, std::string title,
                             std::vector<std::pair<std::string, std::vector<std::string>>> lists,
                             std::string created_at = {}) {
    std::vector<Party> parties;
    parties.reserve(lists.size());
    for (auto& [name, cands] : lists)
      parties.push_back(Party{parties.size(), std::move(name), std::move(cands)});
    return ElectionConfig(id, std::move(title), std::move(parties), std::move(created_at));
  }

  const ElectionId& id() const noexcept { return id_; }
  const std::string& title() const noexcept { return title_; }
  const std::vector<Party>& parties() const noexcept { return parties_; }
  const Party& party(std::size_t index) const { return parties_.at(index); }
  const std::string& created_at() const noexcept { return created_at_; }

  bool operator==(const ElectionConfig&) const = default;

 private:
  ElectionId id_;
  std::string title_;
  std::vector<Party> parties_;
  std::string created_at_;
};

/// A voter's choice: one party plus the approved candidates of that party.
/// An empty approval set is a valid party-only vote.
struct VoteSelection {
  std::size_t party_index = 0;
  std::set<std::size_t> approvals;

  bool operator==(const VoteSelection&) const = default;
  auto operator<=>(const VoteSelection&) const = default;
};

struct SelectionVerdict {
  std::optional<Errc> violation;
  std::string detail;

  bool ok() const noexcept { return !violation.has_value(); }
  explicit operator bool() const noexcept { return ok(); }
};

inline SelectionVerdict validate_selection(const ElectionConfig& config, const VoteSelection& sel) {
  if (sel.party_index >= config.parties().size()) {
    return {Errc::PartyOutOfRange, "party " + std::to_string(sel.party_index) + " of " +
                                       std::to_string(config.parties().size())};
  }
  const auto count = config.party(sel.party_index).candidates.size();
  for (std::size_t c : sel.approvals) {
    if (c >= count) {
      return {Errc::CandidateOutOfRange,
              "candidate " + std::to_string(c) + " of " + std::to_string(count)};
    }
  }
  return {};
}

inline void require_valid(const ElectionConfig& config, const VoteSelection& sel) {
  if (auto v = validate_selection(config, sel); !v) throw Error(*v.violation, v.detail);
}

// ---------------------------------------------------------------------------
// Config file format:
//
//   ELECTION <16 hex chars> <title>
//   CREATED <iso-8601 date>          (optional)
//   PARTY <name>
//   CAND <name>
//   ...
//
// Blank lines are skipped; lines whose first non-blank character is `#` are
// comments.

inline ElectionConfig parse_config(std::istream& in) {
  std::optional<ElectionId> id;
  std::string title;
  std::string created_at;
  std::vector<std::pair<std::string, std::vector<std::string>>> lists;

  std::string line;
  std::size_t lineno = 0;
  auto parse_fail = [&](const std::string& what) {
    throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    const auto sp = line.find(' ');
    const std::string keyword = line.substr(0, sp);
    std::string rest = sp == std::string::npos ? std::string() : line.substr(sp + 1);
    while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.pop_back();

    if (keyword == "ELECTION") {
      if (id) parse_fail("duplicate ELECTION line");
      if (!lists.empty()) parse_fail("ELECTION must come first");
      const auto sp2 = rest.find(' ');
      const std::string hex = rest.substr(0, sp2);
      if (hex.size() != 16) parse_fail("election id must be 16 hex chars");
      try {
        id = fixed_from_hex<8>(hex);
      } catch (const Error&) {
        parse_fail("election id is not hex");
      }
      title = sp2 == std::string::npos ? std::string() : rest.substr(sp2 + 1);
    } else if (keyword == "CREATED") {
      if (!id) parse_fail("CREATED before ELECTION");
      created_at = rest;
    } else if (keyword == "PARTY") {
      if (!id) parse_fail("PARTY before ELECTION");
      lists.emplace_back(rest, std::vector<std::string>{});
    } else if (keyword == "CAND") {
      if (lists.empty()) parse_fail("CAND before any PARTY");
      lists.back().second.push_back(rest);
    } else {
      parse_fail("unknown directive '" + keyword + "'");
    }
  }
  if (!id) throw Error(Errc::ParseError, "missing ELECTION line");
  return ElectionConfig::make(*id, std::move(title), std::move(lists), std::move(created_at));
}

inline ElectionConfig parse_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

inline ElectionConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  return parse_config(in);
}

inline std::string format_config(const ElectionConfig& config) {
  std::string out = "ELECTION " + to_hex(config.id());
  if (!config.title().empty()) out += " " + config.title();
  out += "\n";
  if (!config.created_at().empty()) out += "CREATED " + config.created_at() + "\n";
  for (const Party& p : config.parties()) {
    out += "PARTY " + p.name + "\n";
    for (const auto& c : p.candidates) out += "CAND " + c + "\n";
  }
  return out;
}

inline void save_config(const ElectionConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path);
  out << format_config(config);
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path);
}

}  // namespace bpv
