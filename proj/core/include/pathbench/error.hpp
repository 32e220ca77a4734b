// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pathbench {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (empty input,
/// zero pixel count, undersized image, zero-norm vector, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed text or byte input. `offset` is the byte position where parsing
/// stopped, when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A container or stream does not follow its binary layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that violates a semantic constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathbench
