#pragma once

#include <stdexcept>
#include <string>

namespace tb {

// Invalid workload, pool or field configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalDivergence : public std::runtime_error {
 public:
  NumericalDivergence(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Duplicate (variable, step) put into the staging service.
class DuplicateStep : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace tb
