#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace l1adapt {

enum class Errc {
    InvalidArgument,
    NotHurwitz,
    NotSPD,
    NoConvergence,
    SingularMatrix,
    ZeroDCGain,
    ImproperTransferFunction,
    IllPosedLoop,
    UnstableSystem,
    ToleranceNotMet,
    SyntaxError,
    UnknownIdentifier,
    ArityError,
    NonFinite,
    EstimateOutOfBounds,
    UnstableC,
    CertificateUnavailable,
    NotControllable,
    Diverged,
    SchemaError,
};

constexpr std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotHurwitz: return "NotHurwitz";
    case Errc::NotSPD: return "NotSPD";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::ZeroDCGain: return "ZeroDCGain";
    case Errc::ImproperTransferFunction: return "ImproperTransferFunction";
    case Errc::IllPosedLoop: return "IllPosedLoop";
    case Errc::UnstableSystem: return "UnstableSystem";
    case Errc::ToleranceNotMet: return "ToleranceNotMet";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownIdentifier: return "UnknownIdentifier";
    case Errc::ArityError: return "ArityError";
    case Errc::NonFinite: return "NonFinite";
    case Errc::EstimateOutOfBounds: return "EstimateOutOfBounds";
    case Errc::UnstableC: return "UnstableC";
    case Errc::CertificateUnavailable: return "CertificateUnavailable";
    case Errc::NotControllable: return "NotControllable";
    case Errc::Diverged: return "Diverged";
    case Errc::SchemaError: return "SchemaError";
    }
    return "Unknown";
}

// Every failure in the library is reported through this type; `code()` is what
// callers branch on, the message is for humans.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Error(Errc code, const std::string& what, std::size_t offset)
        : std::runtime_error(std::string(to_string(code)) + " at byte " + std::to_string(offset) +
                             ": " + what),
          code_(code), offset_(offset) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }
    [[nodiscard]] std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    Errc code_;
    std::optional<std::size_t> offset_;
};

} // namespace l1adapt
