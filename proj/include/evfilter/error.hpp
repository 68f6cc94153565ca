#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evf {

enum class ErrorCode {
    MalformedRecord,
    OutOfBounds,
    NonMonotonic,
    IoFailure,
    GeometryMismatch,
    InsufficientBins,
    UnlabeledEvents,
    DegenerateScene,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::OutOfBounds: return "OUT_OF_BOUNDS";
    case ErrorCode::NonMonotonic: return "NON_MONOTONIC";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::GeometryMismatch: return "GEOMETRY_MISMATCH";
    case ErrorCode::InsufficientBins: return "INSUFFICIENT_BINS";
    case ErrorCode::UnlabeledEvents: return "UNLABELED_EVENTS";
    case ErrorCode::DegenerateScene: return "DEGENERATE_SCENE";
    }
    return "UNKNOWN";
}

/// Library error. `record_index` is the 0-based index of the offending
/// record when the failure is tied to one, -1 otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::int64_t record_index = -1)
        : std::runtime_error(format(code, message, record_index)),
          code_(code),
          record_index_(record_index) {}

    ErrorCode code() const { return code_; }
    std::int64_t record_index() const { return record_index_; }

private:
    static std::string format(ErrorCode code, const std::string& message, std::int64_t index) {
        std::string out = error_code_name(code);
        out += ": ";
        out += message;
        if (index >= 0) {
            out += " (record ";
            out += std::to_string(index);
            out += ")";
        }
        return out;
    }

    ErrorCode code_;
    std::int64_t record_index_;
};

} // namespace evf
