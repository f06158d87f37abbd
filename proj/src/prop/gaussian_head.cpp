#include "pfl/prop/gaussian_head.hpp"

#include "pfl/num/nn.hpp"

namespace pfl::prop {

Matrix kernel_covariance(const Vector& z, const Matrix& c) {
  if (c.rows() != c.cols() || c.rows() != z.size())
    throw DimensionError("kernel_covariance: C must be N x N with N = len(z)");
  const Matrix k = num::kernel_gauss(z);
  Matrix sigma = c * k * c.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

GaussianProposalParams make_gaussian_params(Vector mu, Matrix sigma) {
  if (sigma.rows() != mu.size()) throw DimensionError("gaussian head: mu/Sigma size mismatch");
  GaussianProposalParams p;
  p.mu = std::move(mu);
  p.sigma = std::move(sigma);
  num::CholResult chol = num::cholesky(p.sigma);
  p.L = std::move(chol.L);
  p.jitter = chol.jitter;
  return p;
}

std::pair<Vector, double> gaussian_sample(const GaussianProposalParams& p, num::Rng& rng) {
  const Vector u = rng.normal_matrix(p.mu.size(), 1).col(0);
  Vector x = p.mu + p.L * u;
  const double logpdf = num::gaussian_logpdf(x, p.mu, p.L);
  return {std::move(x), logpdf};
}

double gaussian_head_logpdf(const GaussianProposalParams& p, const Vector& x) {
  return num::gaussian_logpdf(x, p.mu, p.L);
}

}  // namespace pfl::prop
