// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace partrans {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnknownDirection : public Error {
 public:
  explicit UnknownDirection(const std::string& key)
      : Error("no prompts configured for direction '" + key + "'") {}
};

/// Raised before any transport activity when a request cannot fit the
/// model's context window.
class ContextOverflow : public Error {
 public:
  ContextOverflow(std::size_t estimated, std::size_t limit)
      : Error("context overflow: " + std::to_string(estimated) +
              " tokens requested, limit " + std::to_string(limit)),
        estimated_(estimated),
        limit_(limit) {}

  std::size_t estimated() const noexcept { return estimated_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t estimated_;
  std::size_t limit_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ScriptExhausted : public Error {
 public:
  explicit ScriptExhausted(std::size_t consumed)
      : Error("scripted backend exhausted after " + std::to_string(consumed) +
              " replies") {}
};

class ExtractionFailed : public Error {
 public:
  using Error::Error;
};

/// The compiler binary itself could not be launched. Never retried.
class ToolchainMissing : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class RowStoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace partrans
