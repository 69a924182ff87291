#include "vlnaug/error.hpp"

namespace vlnaug {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kInvalidArgument: return "invalid-argument";
        case ErrorKind::kDegenerateGeometry: return "degenerate-geometry";
        case ErrorKind::kParse: return "parse-error";
        case ErrorKind::kIo: return "io-error";
        case ErrorKind::kMissingTemplate: return "missing-template";
        case ErrorKind::kGenerationFailed: return "generation-failed";
        case ErrorKind::kClipRejected: return "clip-rejected";
        case ErrorKind::kInvalidTrajectory: return "invalid-trajectory";
        case ErrorKind::kUnreachable: return "unreachable";
    }
    return "unknown";
}

}  // namespace vlnaug
