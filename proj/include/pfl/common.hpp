#ifndef PFL_COMMON_HPP
#define PFL_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace pfl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error hierarchy. Every failure surfaced by the library carries a category
// tag so the CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "dimension"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config"; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "numerical"; }
};

class ContractError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "contract"; }
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "degeneracy"; }
};

class StoreError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "store"; }
};

class MetricError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "metric"; }
};

class AggregationError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "aggregation"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io"; }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError(what + ": non-finite entries");
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace pfl

#endif  // PFL_COMMON_HPP
