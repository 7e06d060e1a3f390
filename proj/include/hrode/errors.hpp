#pragma once

#include <stdexcept>
#include <string>

namespace hrode {

// Thrown when an iterative search exceeds its configured budget.
class ResourceLimitError : public std::runtime_error {
 public:
  explicit ResourceLimitError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state reached; last_time is the last finite time (or iteration).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_time)
      : std::runtime_error(what), last_time_(last_time) {}
  double last_time() const { return last_time_; }

 private:
  double last_time_;
};

// Configuration/parse failure; `key` names the offending field when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key = "")
      : std::runtime_error(key.empty() ? what : what + " (key: " + key + ")"),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace hrode
