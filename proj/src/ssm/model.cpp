#include "pfl/ssm/model.hpp"

#include <cmath>
#include <ostream>

namespace pfl::ssm {

Nonlinearity nonlinearity_from_string(const std::string& tag) {
  if (tag == "identity") return Nonlinearity::kIdentity;
  if (tag == "absolute-value") return Nonlinearity::kAbsoluteValue;
  if (tag == "sir") return Nonlinearity::kSir;
  throw ConfigError("unknown nonlinearity: " + tag);
}

std::string to_string(Nonlinearity phi) {
  switch (phi) {
    case Nonlinearity::kIdentity:
      return "identity";
    case Nonlinearity::kAbsoluteValue:
      return "absolute-value";
    case Nonlinearity::kSir:
      return "sir";
  }
  throw ConfigError("unknown nonlinearity tag");
}

Vector sir_increments(const Vector& state, const SirParams& p) {
  if (state.size() != 3) throw DimensionError("sir: state must be (S, I, R)");
  const double infections = p.beta * state(0) * state(1) * p.delta;
  const double removals = p.gamma * state(1) * p.delta;
  Vector inc(3);
  inc << -infections, infections - removals, removals;
  return inc;
}

Vector sir_step(const Vector& state, const SirParams& p, const Vector& noise) {
  if (noise.size() != 3) throw DimensionError("sir: noise must have 3 components");
  return state + sir_increments(state, p) + noise;
}

Vector InitialLaw::sample(num::Rng& rng) const {
  NoiseLaw law{family, variance};
  return mean + law.sample_vec(mean.size(), rng);
}

void ModelSpec::validate() const {
  if (n < 1 || m < 1) throw ConfigError("model: dimensions must be positive");
  if (m > n) throw ConfigError("model: measurement dimension exceeds state dimension");
  if (a.rows() != n || a.cols() != n) throw DimensionError("model: A must be N x N");
  if (c.rows() != m || c.cols() != n) throw DimensionError("model: C must be M x N");
  if (initial.mean.size() != n) throw DimensionError("model: initial mean must have length N");
  if (state_noise.sigma2 <= 0.0 || measurement_noise.sigma2 <= 0.0 || initial.variance <= 0.0)
    throw ConfigError("model: noise variances must be strictly positive");
  if (phi == Nonlinearity::kSir) {
    if (n != 3) throw ConfigError("model: SIR dynamics require N = 3");
    if (sir.beta <= 0.0 || sir.gamma <= 0.0 || sir.delta <= 0.0)
      throw ConfigError("model: SIR parameters must be positive");
  }
  require_finite(a, "model A");
  require_finite(c, "model C");
  require_finite(initial.mean, "model initial mean");
}

Vector ModelSpec::apply_phi(const Vector& v) const {
  switch (phi) {
    case Nonlinearity::kIdentity:
      return v;
    case Nonlinearity::kAbsoluteValue:
      return v.cwiseAbs();
    case Nonlinearity::kSir:
      return v + sir_increments(v, sir);
  }
  throw ConfigError("unknown nonlinearity tag");
}

Vector ModelSpec::transition_mean(const Vector& x_prev) const {
  return apply_phi(a * x_prev);
}

Matrix ModelSpec::transition_mean_batch(const Matrix& x_prev) const {
  Matrix ax = a * x_prev;
  switch (phi) {
    case Nonlinearity::kIdentity:
      return ax;
    case Nonlinearity::kAbsoluteValue:
      return ax.cwiseAbs();
    case Nonlinearity::kSir: {
      Matrix out(ax.rows(), ax.cols());
      for (Index k = 0; k < ax.cols(); ++k) out.col(k) = ax.col(k) + sir_increments(ax.col(k), sir);
      return out;
    }
  }
  throw ConfigError("unknown nonlinearity tag");
}

Trajectory simulate(const ModelSpec& model, Index horizon, num::Rng& rng) {
  if (horizon < 0) throw ConfigError("simulate: horizon must be non-negative");
  model.validate();
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.measurements.reserve(static_cast<std::size_t>(horizon) + 1);

  Vector x = model.initial.sample(rng);
  for (Index t = 0; t <= horizon; ++t) {
    if (t > 0) x = model.transition_mean(x) + model.state_noise.sample_vec(model.n, rng);
    const Vector y = model.c * x + model.measurement_noise.sample_vec(model.m, rng);
    traj.states.push_back(x);
    traj.measurements.push_back(y);
  }
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.states.empty()) throw ContractError("trajectory csv: empty trajectory");
  const Index n = traj.states[0].size();
  const Index m = traj.measurements.empty() ? 0 : traj.measurements[0].size();
  os << "t";
  for (Index i = 1; i <= n; ++i) os << ",x_" << i;
  for (Index i = 1; i <= m; ++i) os << ",y_" << i;
  os << "\n";
  os.precision(17);
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    os << t;
    for (Index i = 0; i < n; ++i) os << "," << traj.states[t](i);
    for (Index i = 0; i < m; ++i) {
      os << ",";
      if (t < traj.measurements.size()) os << traj.measurements[t](i);
    }
    os << "\n";
  }
}

}  // namespace pfl::ssm
