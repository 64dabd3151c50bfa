#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bpv {

/// Every failure the library reports. The names double as the
/// machine-parsable error tokens printed by the CLI.
enum class Errc {
  // election model
  PartyOutOfRange,
  CandidateOutOfRange,
  ParseError,
  InvariantViolation,
  // ballot codec
  BadVersion,
  ReservedNonZero,
  StrayApprovalBit,
  ModulusTooSmall,
  BadStructure,
  WrongElection,
  Overflow,
  // blind signatures
  MessageOutOfRange,
  FactorNotUnit,
  // identity / authority
  DuplicateVoterId,
  UnknownVoter,
  BadSignature,
  AlreadyRequested,
  AdversarialDisabled,
  // voter flow
  LocalVerifyFailed,
  BadFraming,
  DecodeError,
  // tally / gate
  LookupUnavailable,
  BoardWriteFailure,
  // legacy
  NotEligible,
  // bulletin board / io
  ChainBroken,
  IoFailure,
  Usage,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::PartyOutOfRange: return "PartyOutOfRange";
    case Errc::CandidateOutOfRange: return "CandidateOutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::BadVersion: return "BadVersion";
    case Errc::ReservedNonZero: return "ReservedNonZero";
    case Errc::StrayApprovalBit: return "StrayApprovalBit";
    case Errc::ModulusTooSmall: return "ModulusTooSmall";
    case Errc::BadStructure: return "BadStructure";
    case Errc::WrongElection: return "WrongElection";
    case Errc::Overflow: return "Overflow";
    case Errc::MessageOutOfRange: return "MessageOutOfRange";
    case Errc::FactorNotUnit: return "FactorNotUnit";
    case Errc::DuplicateVoterId: return "DuplicateVoterId";
    case Errc::UnknownVoter: return "UnknownVoter";
    case Errc::BadSignature: return "BadSignature";
    case Errc::AlreadyRequested: return "AlreadyRequested";
    case Errc::AdversarialDisabled: return "AdversarialDisabled";
    case Errc::LocalVerifyFailed: return "LocalVerifyFailed";
    case Errc::BadFraming: return "BadFraming";
    case Errc::DecodeError: return "DecodeError";
    case Errc::LookupUnavailable: return "LookupUnavailable";
    case Errc::BoardWriteFailure: return "BoardWriteFailure";
    case Errc::NotEligible: return "NotEligible";
    case Errc::ChainBroken: return "ChainBroken";
    case Errc::IoFailure: return "IoFailure";
    case Errc::Usage: return "Usage";
  }
  return "Unknown";
}

/// Exception carrying a structured error code plus free-form detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  explicit Error(Errc code)
      : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace bpv
