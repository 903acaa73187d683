// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_ERRORS_HPP
#define OCUVER_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ocuver {

/// Malformed or truncated input stream. Carries the byte offset at which
/// parsing failed.
class DecodeError : public std::runtime_error {
public:
    DecodeError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Invalid configuration (architecture, run config keys, parameter ranges).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Training aborted (non-finite loss or gradient).
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

/// Persistent storage failure (file I/O on models or the embedding database).
class StorageError : public std::runtime_error {
public:
    explicit StorageError(const std::string& what) : std::runtime_error(what) {}
};

/// A stored file exists but its contents are inconsistent.
class CorruptionError : public std::runtime_error {
public:
    explicit CorruptionError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ocuver

#endif // OCUVER_ERRORS_HPP
