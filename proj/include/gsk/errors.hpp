#pragma once

#include <stdexcept>
#include <string>

namespace gsk {

/// A computation would materialize infinitely many nonzero degrees.
///
/// Carries the location (point, degree group, ...) at which finiteness fails,
/// so callers can surface it instead of truncating silently.
class InfiniteSupportError : public std::runtime_error {
public:
  InfiniteSupportError(std::string where, std::string detail)
      : std::runtime_error("infinite support at " + where + ": " + detail),
        where_(std::move(where)),
        detail_(std::move(detail)) {}

  const std::string& where() const { return where_; }
  const std::string& detail() const { return detail_; }

private:
  std::string where_, detail_;
};

/// Flatness of a cut kernel could not be certified over a non-field base.
class FlatnessUndecidedError : public std::runtime_error {
public:
  explicit FlatnessUndecidedError(const std::string& what)
      : std::runtime_error("flatness undecided: " + what) {}
};

/// Operation requires a field base ring.
class NonFieldBaseError : public std::runtime_error {
public:
  explicit NonFieldBaseError(const std::string& op)
      : std::runtime_error(op + " requires a field base ring") {}
};

}  // namespace gsk
