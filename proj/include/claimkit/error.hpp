#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace claimkit {

// Base of everything the library throws. `kind()` is a stable token used in
// the CLI's machine-readable error output.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// Bad input: violated preconditions, malformed records, unknown tokens.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

// Anything that went wrong talking to an external provider.
class TransportError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "transport"; }
};

class MissingEmbeddingError : public ValidationError {
 public:
  explicit MissingEmbeddingError(std::string key)
      : ValidationError("missing embedding for '" + key + "'"), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }
  const char* kind() const noexcept override { return "missing_embedding"; }

 private:
  std::string key_;
};

class UnparseableResponseError : public ValidationError {
 public:
  UnparseableResponseError(const std::string& what, std::string raw)
      : ValidationError(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }
  const char* kind() const noexcept override { return "unparseable_response"; }

 private:
  std::string raw_;
};

// One rejected record of an input file. Lines are 1-based.
struct RecordError {
  std::size_t line = 0;
  std::string message;
};

}  // namespace claimkit
