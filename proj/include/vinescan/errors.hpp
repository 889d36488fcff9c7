// SPDX-License-Identifier: Apache-2.0
//
// Error hierarchy shared by all pipeline stages.

#pragma once

#include <stdexcept>
#include <string>

namespace vinescan {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Input collection is empty where at least one element is required.
class EmptyInputError : public ParameterError {
public:
    explicit EmptyInputError(const std::string& msg) : ParameterError(msg) {}
};

/// File or stream level failure (missing file, malformed format).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed data with a location attached (line number or byte offset).
class ParseError : public IoError {
public:
    ParseError(const std::string& msg, long location)
        : IoError(msg + " (at " + std::to_string(location) + ")"), location_(location) {}
    long location() const { return location_; }

private:
    long location_;
};

/// Inconsistent counts or other semantic validation failure.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// External classifier failure or timeout; carries the offending patch id.
class ClassifierError : public std::runtime_error {
public:
    ClassifierError(const std::string& msg, int patch_id)
        : std::runtime_error(msg + " (patch " + std::to_string(patch_id) + ")"),
          patch_id_(patch_id) {}
    int patch_id() const { return patch_id_; }

private:
    int patch_id_;
};

}  // namespace vinescan
