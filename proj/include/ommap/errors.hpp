#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ommap {

// Base for all library errors; `kind()` is the machine-readable tag the CLI
// writes into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& what) : Error("invalid-parameter", what) {}
};

class InvalidPath : public Error {
 public:
  explicit InvalidPath(const std::string& what) : Error("invalid-path", what) {}
};

class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(std::size_t step, const std::string& what)
      : Error("integration-diverged", what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class NoFit : public Error {
 public:
  explicit NoFit(const std::string& what) : Error("no-fit", what) {}
};

}  // namespace ommap
