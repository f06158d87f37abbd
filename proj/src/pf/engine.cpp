#include "pfl/pf/engine.hpp"

#include <cmath>
#include <ostream>

namespace pfl::pf {

double transition_logpdf(const ssm::ModelSpec& model, const Vector& x_prev, const Vector& x) {
  if (x_prev.size() != model.n || x.size() != model.n)
    throw DimensionError("transition_logpdf: state dimension mismatch");
  return model.state_noise.logpdf_vec(x - model.transition_mean(x_prev));
}

double measurement_logpdf(const ssm::ModelSpec& model, const Vector& x, const Vector& y) {
  if (x.size() != model.n || y.size() != model.m)
    throw DimensionError("measurement_logpdf: dimension mismatch");
  return model.measurement_noise.logpdf_vec(y - model.c * x);
}

ParticleEnsemble init_ensemble(const ssm::ModelSpec& model, const Proposal& proposal,
                               Index particles, num::Rng& rng) {
  if (particles < 1) throw ConfigError("init_ensemble: need at least one particle");
  ParticleEnsemble ens;
  ens.states.resize(model.n, particles);
  for (Index k = 0; k < particles; ++k) ens.states.col(k) = model.initial.sample(rng);
  ens.log_weights = Vector::Constant(particles, -std::log(static_cast<double>(particles)));
  ens.memory = proposal.init_memory(particles);
  ens.t = -1;
  return ens;
}

void measurement_update0(ParticleEnsemble& ensemble, const ssm::ModelSpec& model,
                         const Vector& y0) {
  for (Index k = 0; k < ensemble.particles(); ++k)
    ensemble.log_weights(k) += measurement_logpdf(model, ensemble.states.col(k), y0);
  ensemble.t = 0;
}

void sis_step(ParticleEnsemble& ensemble, const Proposal& proposal, const ssm::ModelSpec& model,
              const Vector& y_t, num::Rng& rng) {
  const Index k = ensemble.particles();
  const Index t = ensemble.t + 1;
  Matrix x_new;
  Vector log_pi;
  proposal.sample(model, t, ensemble.states, y_t, ensemble.memory, rng, x_new, log_pi);
  if (x_new.rows() != model.n || x_new.cols() != k || log_pi.size() != k)
    throw ContractError("sis_step: proposal returned wrong shapes");
  for (Index j = 0; j < k; ++j)
    if (!x_new.col(j).allFinite())
      throw NumericalError("sis_step: proposal returned non-finite sample for particle " +
                           std::to_string(j));

  const auto closed = proposal.closed_form_log_increment(model, t, ensemble.states, y_t);
  if (closed) {
    ensemble.log_weights += *closed;
  } else {
    for (Index j = 0; j < k; ++j) {
      const double inc = measurement_logpdf(model, x_new.col(j), y_t) +
                         transition_logpdf(model, ensemble.states.col(j), x_new.col(j)) -
                         log_pi(j);
      ensemble.log_weights(j) += inc;
    }
  }
  ensemble.states = std::move(x_new);
  ensemble.t = t;
}

namespace {

void record_and_maybe_resample(ParticleEnsemble& ens, double threshold_ratio, num::Rng& rng,
                               FilterResult& out) {
  const Vector w = normalize_weights(ens.log_weights);
  out.estimates.push_back(ens.states * w);
  const double ess = effective_sample_size(w);
  out.ess.push_back(ess);
  const bool do_resample = ess < threshold_ratio * static_cast<double>(ens.particles());
  out.resampled.push_back(do_resample ? 1 : 0);
  if (do_resample) resample(ens, rng);
}

}  // namespace

FilterResult run_filter(const ssm::ModelSpec& model, const Proposal& proposal,
                        const std::vector<Vector>& measurements, Index particles,
                        double threshold_ratio, num::Rng& rng) {
  if (threshold_ratio <= 0.0 || threshold_ratio > 1.0)
    throw ConfigError("run_filter: threshold ratio must lie in (0, 1]");
  if (measurements.empty()) throw ConfigError("run_filter: no measurements");

  FilterResult out;
  ParticleEnsemble ens = init_ensemble(model, proposal, particles, rng);
  for (std::size_t t = 0; t < measurements.size(); ++t) {
    try {
      if (t == 0)
        measurement_update0(ens, model, measurements[0]);
      else
        sis_step(ens, proposal, model, measurements[t], rng);
      record_and_maybe_resample(ens, threshold_ratio, rng, out);
    } catch (const DegeneracyError& e) {
      throw DegeneracyError(std::string(e.what()) + " at time " + std::to_string(t));
    }
  }
  return out;
}

void write_diagnostics_csv(std::ostream& os, const FilterResult& result) {
  if (result.estimates.empty()) throw ContractError("diagnostics csv: empty result");
  const Index n = result.estimates[0].size();
  os << "t,ess,resampled";
  for (Index i = 1; i <= n; ++i) os << ",estimate_" << i;
  os << "\n";
  os.precision(17);
  for (std::size_t t = 0; t < result.estimates.size(); ++t) {
    os << t << "," << result.ess[t] << "," << static_cast<int>(result.resampled[t]);
    for (Index i = 0; i < n; ++i) os << "," << result.estimates[t](i);
    os << "\n";
  }
}

}  // namespace pfl::pf
