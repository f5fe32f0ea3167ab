#pragma once

#include <stdexcept>
#include <string>

namespace vifreg {

// Base class for all library errors so callers can catch everything from
// this library in one handler when they need to.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input dimensions do not agree (rows of X vs length of y vs length of w).
class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

// Weighted design matrix is numerically singular.
class RankDeficient : public Error {
 public:
  explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

// A candidate column carries no usable signal: (near-)zero weighted norm or
// weighted-collinear with the already-selected columns.
class DegenerateCandidate : public Error {
 public:
  explicit DegenerateCandidate(const std::string& msg) : Error(msg) {}
};

// A scale estimate collapsed to zero (constant input after location removal).
class ZeroScale : public Error {
 public:
  explicit ZeroScale(const std::string& msg) : Error(msg) {}
};

// Malformed input file; message carries the offending line number.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Response column name not present in the header.
class UnknownResponse : public Error {
 public:
  explicit UnknownResponse(const std::string& msg) : Error(msg) {}
};

// File parsed but contains no usable data rows.
class EmptyData : public Error {
 public:
  explicit EmptyData(const std::string& msg) : Error(msg) {}
};

// Bad key/value in an experiment config file or CLI argument combination.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace vifreg
