#pragma once

#include <stdexcept>
#include <string>

namespace dae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or image extents that do not agree. `dimension()` names the offending axis.
class ShapeError : public Error {
public:
    ShapeError(std::string dimension, const std::string& what)
        : Error(what), dimension_(std::move(dimension)) {}
    const std::string& dimension() const noexcept { return dimension_; }

private:
    std::string dimension_;
};

/// Invalid configuration, preset, or precondition on user-supplied parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing, malformed, or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or other numerical breakdown.
class NumericError : public Error {
public:
    using Error::Error;
};

enum class ImageErrc { unsupported_format, truncated, bad_magic, io };

class ImageError : public DataError {
public:
    ImageError(ImageErrc code, const std::string& what) : DataError(what), code_(code) {}
    ImageErrc code() const noexcept { return code_; }

private:
    ImageErrc code_;
};

enum class CheckpointErrc { io, bad_magic, version_mismatch, checksum_mismatch, malformed };

class CheckpointError : public DataError {
public:
    CheckpointError(CheckpointErrc code, const std::string& what) : DataError(what), code_(code) {}
    CheckpointErrc code() const noexcept { return code_; }

private:
    CheckpointErrc code_;
};

}  // namespace dae
