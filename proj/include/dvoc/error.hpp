#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dvoc {

enum class ErrorCode {
    SingularInterior,
    DisconnectedGraph,
    NegativeWeight,
    NotSymmetric,
    ZeroVoltageSetpoint,
    ZeroVoltage,
    DimensionMismatch,
    InvalidArgument,
    EigenFailure,
    DegenerateDominantMode,
    IllPosedAmplitude,
    InconsistentSetpoints,
    ZeroEigenvectorEntry,
    ConditionNotCertified,
    StepSizeCollapse,
    NonFinite,
    InsufficientSamples,
    ConfigParse,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a machine-readable code. All library failures are
/// reported through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dvoc
