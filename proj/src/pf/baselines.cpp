#include "pfl/pf/baselines.hpp"

#include <cmath>

#include "pfl/num/linalg.hpp"

namespace pfl::pf {

void BootstrapProposal::sample(const ssm::ModelSpec& model, Index /*t*/, const Matrix& x_prev,
                               const Vector& /*y_t*/, BatchMemory& /*memory*/, num::Rng& rng,
                               Matrix& x_out, Vector& log_pi_out) const {
  const Index k = x_prev.cols();
  const Matrix mean = model.transition_mean_batch(x_prev);
  x_out = mean + model.state_noise.sample_mat(model.n, k, rng);
  log_pi_out.resize(k);
  for (Index j = 0; j < k; ++j)
    log_pi_out(j) = model.state_noise.logpdf_vec(x_out.col(j) - mean.col(j));
}

bool MinDegeneracyProposal::exact_for(const ssm::ModelSpec& model) {
  return model.phi == ssm::Nonlinearity::kIdentity &&
         model.state_noise.family == ssm::NoiseFamily::kGaussian &&
         model.measurement_noise.family == ssm::NoiseFamily::kGaussian;
}

GaussianConditional MinDegeneracyProposal::conditional(const ssm::ModelSpec& model,
                                                       const Vector& x_prev, const Vector& y_t) {
  const double sv2 = model.state_noise.sigma2;
  const double sw2 = model.measurement_noise.sigma2;
  const Matrix precision =
      Matrix::Identity(model.n, model.n) / sv2 + model.c.transpose() * model.c / sw2;
  GaussianConditional out;
  out.sigma = precision.llt().solve(Matrix::Identity(model.n, model.n));
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  out.mu = out.sigma *
           (model.transition_mean(x_prev) / sv2 + model.c.transpose() * y_t / sw2);
  return out;
}

void MinDegeneracyProposal::sample(const ssm::ModelSpec& model, Index /*t*/, const Matrix& x_prev,
                                   const Vector& y_t, BatchMemory& /*memory*/, num::Rng& rng,
                                   Matrix& x_out, Vector& log_pi_out) const {
  const Index k = x_prev.cols();
  // Sigma does not depend on the particle; factor once.
  const GaussianConditional head = conditional(model, x_prev.col(0), y_t);
  const num::CholResult chol = num::cholesky(head.sigma);

  x_out.resize(model.n, k);
  log_pi_out.resize(k);
  const double sv2 = model.state_noise.sigma2;
  const double sw2 = model.measurement_noise.sigma2;
  const Matrix mean_base = model.transition_mean_batch(x_prev) / sv2;
  const Vector meas_part = model.c.transpose() * y_t / sw2;
  for (Index j = 0; j < k; ++j) {
    const Vector mu = head.sigma * (mean_base.col(j) + meas_part);
    const Vector draw = mu + chol.L * rng.normal_matrix(model.n, 1).col(0);
    x_out.col(j) = draw;
    log_pi_out(j) = num::gaussian_logpdf(draw, mu, chol.L);
  }
}

std::optional<Vector> MinDegeneracyProposal::closed_form_log_increment(
    const ssm::ModelSpec& model, Index /*t*/, const Matrix& x_prev, const Vector& y_t) const {
  const double sv2 = model.state_noise.sigma2;
  const double sw2 = model.measurement_noise.sigma2;
  Matrix cov = sv2 * model.c * model.c.transpose();
  cov.diagonal().array() += sw2;
  const num::CholResult chol = num::cholesky(cov);

  const Matrix mean = model.c * model.transition_mean_batch(x_prev);
  Vector inc(x_prev.cols());
  for (Index j = 0; j < x_prev.cols(); ++j)
    inc(j) = num::gaussian_logpdf(y_t, mean.col(j), chol.L);
  return inc;
}

}  // namespace pfl::pf
