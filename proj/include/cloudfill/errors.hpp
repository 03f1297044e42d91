#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cloudfill {

enum class ErrorKind {
    Parse,
    InvalidArgument,
    BackendTransport,
    BackendProtocol,
    DegenerateGeometry,
};

/// Base class for all library failures. Carries a category so callers can
/// map failures to process exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed input bytes; byte_offset, when known, points at the offending
/// position.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(ErrorKind::Parse, msg) {}
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(ErrorKind::Parse, msg + " (byte " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_ = 0;
};

class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& msg)
        : Error(ErrorKind::InvalidArgument, msg) {}
};

class DegenerateGeometryError : public Error {
public:
    explicit DegenerateGeometryError(const std::string& msg)
        : Error(ErrorKind::DegenerateGeometry, msg) {}
};

/// Failure talking to a generative backend. Transport errors cover
/// connection problems and timeouts; protocol errors cover bad replies.
class BackendError : public Error {
public:
    BackendError(ErrorKind kind, const std::string& msg, int attempts)
        : Error(kind, msg + " (after " + std::to_string(attempts) + " attempt" +
                          (attempts == 1 ? "" : "s") + ")"),
          attempts_(attempts) {}
    int attempts() const { return attempts_; }
    bool transport() const { return kind() == ErrorKind::BackendTransport; }

private:
    int attempts_;
};

/// Wraps a failure with the pipeline stage that raised it; keeps the inner kind.
class StageError : public Error {
public:
    StageError(const std::string& stage, ErrorKind kind, const std::string& msg)
        : Error(kind, "stage " + stage + ": " + msg), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Process exit code for an error category (CLI contract: 2 = input error,
/// 3 = backend failure, 4 = degenerate geometry).
inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse:
        case ErrorKind::InvalidArgument:
            return 2;
        case ErrorKind::BackendTransport:
        case ErrorKind::BackendProtocol:
            return 3;
        case ErrorKind::DegenerateGeometry:
            return 4;
    }
    return 1;
}

}  // namespace cloudfill
