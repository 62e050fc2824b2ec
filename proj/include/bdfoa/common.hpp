#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace bdfoa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `column` is 1-based.
struct ParseError : Error {
  int column;
  ParseError(const std::string& msg, int col)
      : Error(msg + " (column " + std::to_string(col) + ")"), column(col) {}
};

/// Evaluation outside the domain of a primitive (log/sqrt/division/power).
/// `subexpression` is the printed form of the offending subtree.
struct DomainError : Error {
  std::string subexpression;
  DomainError(const std::string& msg, std::string subexpr)
      : Error(msg + " in subexpression: " + subexpr), subexpression(std::move(subexpr)) {}
};

/// Inconsistent dimensions between expressions, points and problems.
struct DimensionError : Error {
  using Error::Error;
};

/// Precondition violation on an operation argument.
struct InvalidArgument : Error {
  using Error::Error;
};

/// Formats a double with 17 significant digits (exact round trip).
std::string format_exact(double v);

/// Formats a double with 12 significant digits ("%.12g"), the fixed
/// format used by all emitted reports and data files.
std::string format_g12(double v);

}  // namespace bdfoa
