#ifndef PFL_PF_ENGINE_HPP
#define PFL_PF_ENGINE_HPP

#include <iosfwd>
#include <vector>

#include "pfl/pf/proposal.hpp"

namespace pfl::pf {

// Exact log densities of the configured noise families at the residual.
double transition_logpdf(const ssm::ModelSpec& model, const Vector& x_prev, const Vector& x);
double measurement_logpdf(const ssm::ModelSpec& model, const Vector& x, const Vector& y);

// Fresh ensemble at t = 0: states drawn from the initial law, uniform
// weights, proposal memory initialized. No measurement absorbed yet.
ParticleEnsemble init_ensemble(const ssm::ModelSpec& model, const Proposal& proposal,
                               Index particles, num::Rng& rng);

// Absorb y_0 into a fresh ensemble: weights become the measurement
// log-likelihood (the initial proposal is the initial law itself).
void measurement_update0(ParticleEnsemble& ensemble, const ssm::ModelSpec& model,
                         const Vector& y0);

// One sequential-importance step: propose x_t, update log weights with
// log p(y|x) + log p(x|x_prev) - log pi(x), advance the time index.
void sis_step(ParticleEnsemble& ensemble, const Proposal& proposal, const ssm::ModelSpec& model,
              const Vector& y_t, num::Rng& rng);

struct FilterResult {
  std::vector<Vector> estimates;  // one per time step
  std::vector<double> ess;
  std::vector<char> resampled;
};

// Full filtering pass over y_{0:T}. Resamples after each measurement update
// (including t = 0) whenever ESS < threshold_ratio * K. DegeneracyError is
// annotated with the failing time index.
FilterResult run_filter(const ssm::ModelSpec& model, const Proposal& proposal,
                        const std::vector<Vector>& measurements, Index particles,
                        double threshold_ratio, num::Rng& rng);

// CSV: `t, ess, resampled(0|1), estimate_1..estimate_N`.
void write_diagnostics_csv(std::ostream& os, const FilterResult& result);

}  // namespace pfl::pf

#endif  // PFL_PF_ENGINE_HPP
