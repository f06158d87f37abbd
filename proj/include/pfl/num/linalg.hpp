#ifndef PFL_NUM_LINALG_HPP
#define PFL_NUM_LINALG_HPP

#include "pfl/common.hpp"

namespace pfl::num {

struct CholResult {
  Matrix L;            // lower triangular, strictly positive diagonal
  double jitter = 0.0; // effective diagonal shift actually applied
};

// Lower Cholesky factor of M + jitter*I. M must be square and symmetric
// (1e-10 relative tolerance). If the factorization fails at the requested
// jitter the shift escalates from 1e-9*trace(M)/N by factors of 10, at most
// three times, before giving up with a numerical error. The effective jitter
// is reported so callers can keep densities consistent with the factor used.
CholResult cholesky(const Matrix& m, double jitter = 0.0);

// Largest singular value.
double spectral_norm(const Matrix& m);

// log N(x; mu, Sigma) where L is the lower Cholesky factor of Sigma.
double gaussian_logpdf(const Vector& x, const Vector& mu, const Matrix& L);

// log N(x; mu, sigma2*I).
double gaussian_logpdf_iso(const Vector& x, const Vector& mu, double sigma2);

// Stable log(sum(exp(lw))); requires at least one finite entry.
double logsumexp(const Vector& lw);

}  // namespace pfl::num

#endif  // PFL_NUM_LINALG_HPP
