#ifndef PFL_SSM_NOISE_HPP
#define PFL_SSM_NOISE_HPP

#include <string>

#include "pfl/common.hpp"
#include "pfl/num/rng.hpp"

namespace pfl::ssm {

enum class NoiseFamily { kGaussian, kShiftedExponential, kCenteredUniform };

NoiseFamily noise_family_from_string(const std::string& tag);
std::string to_string(NoiseFamily family);

// Zero-mean i.i.d. noise with per-component variance sigma2. The exponential
// family is Exp(1/sigma) shifted left by sigma; the uniform family spans
// [-sigma*sqrt(3), sigma*sqrt(3)]. Both are moment-matched to (0, sigma2).
struct NoiseLaw {
  NoiseFamily family = NoiseFamily::kGaussian;
  double sigma2 = 1.0;

  double sigma() const { return std::sqrt(sigma2); }
  double sample(num::Rng& rng) const;
  Vector sample_vec(Index dim, num::Rng& rng) const;
  Matrix sample_mat(Index rows, Index cols, num::Rng& rng) const;

  // Log density of one component; -inf outside the support.
  double logpdf(double residual) const;
  // Sum of per-component log densities.
  double logpdf_vec(const Vector& residual) const;
};

}  // namespace pfl::ssm

#endif  // PFL_SSM_NOISE_HPP
