#pragma once

#include <stdexcept>
#include <string>

namespace exitbsde {

/// Non-finite value produced during simulation or evaluation. Carries enough
/// context (path id, step) to reproduce the failure from the seed.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long long path_id = -1, long step = -1)
      : std::runtime_error(what), path_id(path_id), step(step) {}
  long long path_id;
  long step;
};

/// Configuration document rejected (unknown key, bad value, missing file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation needs an exit that the (censored) path never produced.
class CensoredError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace exitbsde
