#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgelat {

enum class Errc {
  InvalidName,
  InvalidArgument,
  AddressFamilyMismatch,
  Malformed,
  Timeout,
  NetworkUnreachable,
  NoAuthority,
  ChainLoop,
  NoConfig,
  NoAnswer,
  ParseFailure,
  NoMapping,
  NoAddress,
  NoSuccess,
  TooFewResults,
  EmptyInput,
  UnpairedKey,
  IoFailure,
  SchemaMismatch,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidName: return "InvalidName";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::AddressFamilyMismatch: return "AddressFamilyMismatch";
    case Errc::Malformed: return "Malformed";
    case Errc::Timeout: return "Timeout";
    case Errc::NetworkUnreachable: return "NetworkUnreachable";
    case Errc::NoAuthority: return "NoAuthority";
    case Errc::ChainLoop: return "ChainLoop";
    case Errc::NoConfig: return "NoConfig";
    case Errc::NoAnswer: return "NoAnswer";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::NoMapping: return "NoMapping";
    case Errc::NoAddress: return "NoAddress";
    case Errc::NoSuccess: return "NoSuccess";
    case Errc::TooFewResults: return "TooFewResults";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnpairedKey: return "UnpairedKey";
    case Errc::IoFailure: return "IoFailure";
    case Errc::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace edgelat
