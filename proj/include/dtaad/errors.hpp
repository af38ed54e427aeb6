#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace dtaad {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Tensor/matrix dimension mismatch.
struct ShapeError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

/// Misuse of a stateful object (consumed tape, missing gradient, ...).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Numerically degenerate input (zero norm, zero variance, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
struct DivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checkpoint carries an unknown format version.
struct UnsupportedFormatError : CheckpointError {
    using CheckpointError::CheckpointError;
};

/// Metric is undefined for the given inputs (e.g. single-class AUC).
struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler() {
    static WarningHandler handler = [](const std::string& msg) {
        std::cerr << "[dtaad] warning: " << msg << "\n";
    };
    return handler;
}

inline void set_warning_handler(WarningHandler h) { warning_handler() = std::move(h); }

inline void warn(const std::string& msg) {
    if (warning_handler()) warning_handler()(msg);
}

}  // namespace dtaad
