// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mabe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad index, non-finite value,
/// length mismatch, out-of-range configuration).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value where a finite one is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or checkpoint text. `where()` is a field path
/// ("train.optimizer.lr") or a "line N" locator.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)), detail_(what) {}
  const std::string& where() const noexcept { return where_; }
  /// The message without the locator.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string where_;
  std::string detail_;
};

}  // namespace mabe
