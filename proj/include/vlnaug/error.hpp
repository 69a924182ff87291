#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlnaug {

enum class ErrorKind {
    kInvalidArgument,
    kDegenerateGeometry,
    kParse,
    kIo,
    kMissingTemplate,
    kGenerationFailed,
    kClipRejected,
    kInvalidTrajectory,
    kUnreachable,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure in a line-oriented input; line is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : Error(ErrorKind::kParse, path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)),
          line_(line) {}

    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace vlnaug
