#include "pfl/pf/kalman.hpp"

namespace pfl::pf {

std::vector<KalmanState> kalman_filter(const ssm::ModelSpec& model,
                                       const std::vector<Vector>& measurements) {
  if (!model.linear_gaussian())
    throw ContractError("kalman_filter: model must be linear with Gaussian noise");
  model.validate();
  if (measurements.empty()) throw ConfigError("kalman_filter: no measurements");

  const Matrix eye_n = Matrix::Identity(model.n, model.n);
  const double sv2 = model.state_noise.sigma2;
  const double sw2 = model.measurement_noise.sigma2;

  std::vector<KalmanState> out;
  out.reserve(measurements.size());

  Vector mean = model.initial.mean;
  Matrix cov = model.initial.variance * eye_n;

  for (std::size_t t = 0; t < measurements.size(); ++t) {
    if (t > 0) {
      mean = model.a * mean;
      cov = model.a * cov * model.a.transpose();
      cov.diagonal().array() += sv2;
    }
    Matrix innov_cov = model.c * cov * model.c.transpose();
    innov_cov.diagonal().array() += sw2;
    const Matrix gain = innov_cov.llt().solve(model.c * cov).transpose();
    mean += gain * (measurements[t] - model.c * mean);
    // Joseph form keeps the covariance symmetric PSD.
    const Matrix j = eye_n - gain * model.c;
    cov = j * cov * j.transpose() + sw2 * gain * gain.transpose();
    cov = 0.5 * (cov + cov.transpose());
    out.push_back({mean, cov});
  }
  return out;
}

}  // namespace pfl::pf
