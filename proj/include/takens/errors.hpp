#pragma once

#include <stdexcept>
#include <string>

namespace takens {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Chart jacobian is rank deficient at the requested point.
class DegenerateChart : public Error {
public:
  using Error::Error;
};

/// Interpolation system is rank deficient (coincident or near-coincident nodes).
class IllConditioned : public Error {
public:
  using Error::Error;
};

/// An eps-ball query returned no points.
class EmptyBall : public Error {
public:
  using Error::Error;
};

/// A differential that must be injective fell below the rank threshold.
class RankDeficient : public Error {
public:
  using Error::Error;
};

/// A base point failed the periodic-point screen.
class PeriodicPoint : public Error {
public:
  using Error::Error;
};

/// Requested singular value is numerically zero.
class DegenerateSingularValue : public Error {
public:
  using Error::Error;
};

/// Fewer scales than the box-count fit needs.
class InsufficientScales : public Error {
public:
  using Error::Error;
};

/// Invalid experiment configuration; message names the offending key.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

}  // namespace takens
