#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Base class for all errors raised by the library. Subclasses exist so
// callers can map failures onto exit codes (usage/data/numerics).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct LexError : Error {
    std::size_t offset;
    LexError(const std::string& msg, std::size_t at)
        : Error(msg + " (byte " + std::to_string(at) + ")"), offset(at) {}
};

struct AnalyzeError : Error {
    using Error::Error;
};

struct InjectError : Error {
    using Error::Error;
};

struct RepairError : Error {
    using Error::Error;
};

struct SplitError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct MaskError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct PhaseError : Error {
    using Error::Error;
};

struct NumericsError : Error {
    using Error::Error;
};

struct EvalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace driftlab
