// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace geowalk {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (non-finite coordinates, size mismatch, bad parameter).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (eigensolver error, diverging training loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The victim answered with something that is not a valid hard label.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The victim could not be reached after the configured retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// An algorithmic invariant was violated, usually by a nondeterministic victim.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Stage one produced no admissible adversarial candidate.
class GenerationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace geowalk
