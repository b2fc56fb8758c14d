#pragma once

#include <stdexcept>
#include <string>

namespace orgsynth {

enum class ErrorCode {
    EmptyCloud,
    DegenerateCloud,
    TooFewPoints,
    UnknownCategory,
    EmptyBoundary,
    SolverDiverged,
    IoError,
    FormatError,
    DimensionMismatch,
    EmptyStats,
    EmptyRepository,
    CategoryOutOfRange,
    UnsupportedRelation,
    UnboundNode,
    MissingSupport,
    MissingCategory,
    NonFiniteLoss,
    InvalidConfig,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EmptyCloud: return "EmptyCloud";
        case ErrorCode::DegenerateCloud: return "DegenerateCloud";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::UnknownCategory: return "UnknownCategory";
        case ErrorCode::EmptyBoundary: return "EmptyBoundary";
        case ErrorCode::SolverDiverged: return "SolverDiverged";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyStats: return "EmptyStats";
        case ErrorCode::EmptyRepository: return "EmptyRepository";
        case ErrorCode::CategoryOutOfRange: return "CategoryOutOfRange";
        case ErrorCode::UnsupportedRelation: return "UnsupportedRelation";
        case ErrorCode::UnboundNode: return "UnboundNode";
        case ErrorCode::MissingSupport: return "MissingSupport";
        case ErrorCode::MissingCategory: return "MissingCategory";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace orgsynth
