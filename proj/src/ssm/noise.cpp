#include "pfl/ssm/noise.hpp"

#include <cmath>
#include <limits>

namespace pfl::ssm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

NoiseFamily noise_family_from_string(const std::string& tag) {
  if (tag == "gaussian") return NoiseFamily::kGaussian;
  if (tag == "shifted-exponential") return NoiseFamily::kShiftedExponential;
  if (tag == "centered-uniform") return NoiseFamily::kCenteredUniform;
  throw ConfigError("unknown noise family: " + tag);
}

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian:
      return "gaussian";
    case NoiseFamily::kShiftedExponential:
      return "shifted-exponential";
    case NoiseFamily::kCenteredUniform:
      return "centered-uniform";
  }
  throw ConfigError("unknown noise family tag");
}

double NoiseLaw::sample(num::Rng& rng) const {
  if (sigma2 <= 0.0) throw ConfigError("noise law: variance must be positive");
  const double s = sigma();
  switch (family) {
    case NoiseFamily::kGaussian:
      return s * rng.normal();
    case NoiseFamily::kShiftedExponential:
      return rng.exponential(1.0 / s) - s;
    case NoiseFamily::kCenteredUniform:
      return rng.uniform(-s * std::sqrt(3.0), s * std::sqrt(3.0));
  }
  throw ConfigError("unknown noise family tag");
}

Vector NoiseLaw::sample_vec(Index dim, num::Rng& rng) const {
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = sample(rng);
  return v;
}

Matrix NoiseLaw::sample_mat(Index rows, Index cols, num::Rng& rng) const {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = sample(rng);
  return m;
}

double NoiseLaw::logpdf(double r) const {
  const double s = sigma();
  switch (family) {
    case NoiseFamily::kGaussian:
      return -0.5 * std::log(2.0 * M_PI * sigma2) - 0.5 * r * r / sigma2;
    case NoiseFamily::kShiftedExponential:
      return r >= -s ? -std::log(s) - (r + s) / s : kNegInf;
    case NoiseFamily::kCenteredUniform: {
      const double hw = s * std::sqrt(3.0);
      return std::abs(r) <= hw ? -std::log(2.0 * hw) : kNegInf;
    }
  }
  throw ConfigError("unknown noise family tag");
}

double NoiseLaw::logpdf_vec(const Vector& residual) const {
  double acc = 0.0;
  for (Index i = 0; i < residual.size(); ++i) {
    const double l = logpdf(residual(i));
    if (l == kNegInf) return kNegInf;
    acc += l;
  }
  return acc;
}

}  // namespace pfl::ssm
