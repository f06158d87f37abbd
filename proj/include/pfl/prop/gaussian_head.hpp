#ifndef PFL_PROP_GAUSSIAN_HEAD_HPP
#define PFL_PROP_GAUSSIAN_HEAD_HPP

#include <utility>

#include "pfl/common.hpp"
#include "pfl/num/linalg.hpp"
#include "pfl/num/rng.hpp"

namespace pfl::prop {

// Mean and covariance produced by a learned head, with the Cholesky factor of
// Sigma + jitter*I cached for sampling and density evaluation.
struct GaussianProposalParams {
  Vector mu;
  Matrix sigma;
  Matrix L;
  double jitter = 0.0;
};

// Sigma = C K(z) C^T with K_ij = exp(-(z_i - z_j)^2); PSD by construction.
Matrix kernel_covariance(const Vector& z, const Matrix& c);

GaussianProposalParams make_gaussian_params(Vector mu, Matrix sigma);

// Draw x = mu + L u with u ~ N(0, I) and evaluate log pi at the draw. The
// density is that of N(mu, Sigma + jitter*I), consistent with the factor.
std::pair<Vector, double> gaussian_sample(const GaussianProposalParams& p, num::Rng& rng);

double gaussian_head_logpdf(const GaussianProposalParams& p, const Vector& x);

}  // namespace pfl::prop

#endif  // PFL_PROP_GAUSSIAN_HEAD_HPP
