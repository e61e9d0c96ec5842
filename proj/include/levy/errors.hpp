#pragma once

#include <stdexcept>
#include <string>

namespace levy {

/// Parameter outside its admissible domain (alpha, sigma, eps, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Not enough data for the requested statistic.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Vector or matrix with the wrong number of entries.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Degenerate geometric object (zero or singular matrix).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}
}  // namespace detail

}  // namespace levy
