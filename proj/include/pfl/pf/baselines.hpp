#ifndef PFL_PF_BASELINES_HPP
#define PFL_PF_BASELINES_HPP

#include "pfl/pf/proposal.hpp"

namespace pfl::pf {

// Transition prior pi = p(x_t | x_{t-1}); the weight increment reduces to the
// measurement likelihood.
class BootstrapProposal : public Proposal {
 public:
  std::string name() const override { return "bootstrap"; }
  void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev, const Vector& y_t,
              BatchMemory& memory, num::Rng& rng, Matrix& x_out,
              Vector& log_pi_out) const override;
};

// Gaussian conditional parameters for one particle.
struct GaussianConditional {
  Vector mu;
  Matrix sigma;
};

// The conditional p(x_t | x_{t-1}, y_t) that minimizes the conditional weight
// variance, exact for linear-Gaussian models. For other noise laws or a
// nonlinear phi this is the moment-matched Gaussian surrogate (mean through
// phi, same variances); runs using it are flagged in output metadata.
class MinDegeneracyProposal : public Proposal {
 public:
  std::string name() const override { return "min-degeneracy"; }

  // (mu, Sigma) of the sampling distribution given one previous state.
  static GaussianConditional conditional(const ssm::ModelSpec& model, const Vector& x_prev,
                                         const Vector& y_t);

  void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev, const Vector& y_t,
              BatchMemory& memory, num::Rng& rng, Matrix& x_out,
              Vector& log_pi_out) const override;

  // log p(y_t | x_{t-1}) = log N(y; C phi(A x_prev), sv^2 C C^T + sw^2 I).
  std::optional<Vector> closed_form_log_increment(const ssm::ModelSpec& model, Index t,
                                                  const Matrix& x_prev,
                                                  const Vector& y_t) const override;

  // True when the model is linear-Gaussian so the conditional is exact.
  static bool exact_for(const ssm::ModelSpec& model);
};

}  // namespace pfl::pf

#endif  // PFL_PF_BASELINES_HPP
