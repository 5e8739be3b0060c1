// Copyright 2026 The polsss Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace polsss {

/// Malformed or mismatched input data (dimension mismatch, bad file contents).
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An operation was asked to act outside its domain (TIR refraction, |g| >= 1, ...).
class RefusalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Stored data does not match its recorded checksum.
class IntegrityError : public std::runtime_error {
  public:
    IntegrityError(const std::string &file, const std::string &what)
        : std::runtime_error(file + ": " + what), file_(file) {}
    const std::string &file() const { return file_; }

  private:
    std::string file_;
};

class NotFoundError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Configuration document violates its schema. `pointer()` is an RFC 6901 JSON pointer.
class SchemaError : public std::runtime_error {
  public:
    SchemaError(const std::string &pointer, const std::string &what)
        : std::runtime_error(pointer + ": " + what), pointer_(pointer) {}
    const std::string &pointer() const { return pointer_; }

  private:
    std::string pointer_;
};

}  // namespace polsss
