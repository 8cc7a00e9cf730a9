#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtvr {

enum class Errc {
  InvalidArgument,
  CalibratedRateNonPositive,
  CalibratedFrequencyNonPositive,
  EmptyCorpus,
  EmptyBuffer,
  StaleIndex,
  DimensionMismatch,
  NonFiniteGradient,
  CorruptCheckpoint,
  Config,
  UnknownParameter,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::CalibratedRateNonPositive: return "CalibratedRateNonPositive";
    case Errc::CalibratedFrequencyNonPositive: return "CalibratedFrequencyNonPositive";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::EmptyBuffer: return "EmptyBuffer";
    case Errc::StaleIndex: return "StaleIndex";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::Config: return "Config";
    case Errc::UnknownParameter: return "UnknownParameter";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the class of error without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace dtvr
