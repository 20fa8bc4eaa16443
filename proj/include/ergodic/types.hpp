/**
 * @file types.hpp
 * @brief Small value types and the error hierarchy shared by every module.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ergodic {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point fell outside the search domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called with inputs that violate its contract.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed map, region, trajectory or config file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment/team configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No start location satisfies every agent type's region constraint.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A spectral band reconstructs to a map with no positive mass.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Unknown agent type in a region lookup.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergodic
