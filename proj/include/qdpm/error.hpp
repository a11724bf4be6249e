#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qdpm {

/// Invalid configuration or model description. Carries every violation found,
/// not only the first one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  explicit ConfigError(const std::string& problem)
      : ConfigError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// An iterative solver hit its iteration cap before reaching tolerance.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required artifact (e.g. a solved policy) is missing or does not fit the
/// running configuration.
class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdpm
