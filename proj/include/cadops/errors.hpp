#pragma once

#include <stdexcept>
#include <string>

namespace cadops {

// Base class for all domain errors raised by the library. CLI maps these to
// exit code 1; anything else escaping is a bug.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SyntaxError : Error {
    std::size_t byte_offset = 0;
    SyntaxError(const std::string& msg, std::size_t offset)
        : Error(msg + " (byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}
};

struct SchemaError : Error {
    using Error::Error;
};

struct TopologyError : Error {
    using Error::Error;
};

struct ValueError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct GraphError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct VersionError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DegenerateModel : Error {
    using Error::Error;
};

struct DegenerateInput : Error {
    using Error::Error;
};

struct DegenerateAxis : Error {
    using Error::Error;
};

struct UnsupportedSurface : Error {
    using Error::Error;
};

struct GenerationRetryExceeded : Error {
    using Error::Error;
};

struct VocabularyMismatch : Error {
    using Error::Error;
};

struct UnknownLabel : Error {
    using Error::Error;
};

struct EmptySketch : Error {
    using Error::Error;
};

}  // namespace cadops
