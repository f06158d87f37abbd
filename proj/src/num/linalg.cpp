#include "pfl/num/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace pfl::num {

namespace {

bool try_llt(const Matrix& m, double jitter, Matrix& out) {
  Matrix shifted = m;
  if (jitter != 0.0) shifted.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) return false;
  out = llt.matrixL();
  // LLT can succeed with a zero pivot on exactly singular input; reject so the
  // jitter escalation kicks in and the diagonal stays strictly positive.
  if ((out.diagonal().array() <= 0.0).any()) return false;
  return true;
}

}  // namespace

CholResult cholesky(const Matrix& m, double jitter) {
  if (m.rows() != m.cols()) throw DimensionError("cholesky: matrix not square");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1.0))
    throw DimensionError("cholesky: matrix not symmetric");
  require_finite(m, "cholesky input");

  CholResult res;
  res.jitter = jitter;
  if (try_llt(m, jitter, res.L)) return res;

  const Index n = m.rows();
  double j = std::max(1e-9 * m.trace() / static_cast<double>(n), 1e-12);
  j = std::max(j, jitter);
  for (int attempt = 0; attempt <= 3; ++attempt) {
    if (try_llt(m, j, res.L)) {
      res.jitter = j;
      return res;
    }
    j *= 10.0;
  }
  throw NumericalError("cholesky: factorization failed after jitter escalation");
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double gaussian_logpdf(const Vector& x, const Vector& mu, const Matrix& L) {
  if (x.size() != mu.size() || L.rows() != x.size())
    throw DimensionError("gaussian_logpdf: size mismatch");
  const Index n = x.size();
  const Vector z = L.triangularView<Eigen::Lower>().solve(x - mu);
  const double logdet = L.diagonal().array().log().sum();
  return -0.5 * n * std::log(2.0 * M_PI) - logdet - 0.5 * z.squaredNorm();
}

double gaussian_logpdf_iso(const Vector& x, const Vector& mu, double sigma2) {
  if (x.size() != mu.size()) throw DimensionError("gaussian_logpdf_iso: size mismatch");
  const Index n = x.size();
  return -0.5 * n * std::log(2.0 * M_PI * sigma2) - 0.5 * (x - mu).squaredNorm() / sigma2;
}

double logsumexp(const Vector& lw) {
  const double m = lw.maxCoeff();
  if (!std::isfinite(m)) {
    if (m == -std::numeric_limits<double>::infinity())
      throw DegeneracyError("logsumexp: all inputs are -inf");
    throw NumericalError("logsumexp: non-finite input");
  }
  double s = 0.0;
  for (Index i = 0; i < lw.size(); ++i) s += std::exp(lw(i) - m);
  return m + std::log(s);
}

}  // namespace pfl::num
