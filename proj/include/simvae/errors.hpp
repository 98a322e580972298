// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace simvae {

// Base class for everything thrown by this library. The CLI maps any
// Error to exit code 2; usage problems are handled before this layer.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape/axis disagreement between tensors (both shapes are spelled out
// in the message).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid value for a mathematical domain, e.g. log of a non-positive
// number or a non-positive variance.
class DomainError : public Error {
public:
    using Error::Error;
};

// A computation produced or received a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

// An operation was called outside its contract (non-scalar loss,
// empty view set, unit-norm violation, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Bad configuration: unknown key, unparseable value, invalid combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input data (IDX files, label ranges, non-normalized tables).
class DataError : public Error {
public:
    using Error::Error;
};

// Checkpoint container problems. `kind` distinguishes the failure modes
// the format can produce so callers/tests can tell them apart.
class CheckpointError : public Error {
public:
    enum class Kind { BadMagic, BadVersion, Truncated, NameMismatch, ShapeMismatch, Io };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace simvae
