#ifndef PFL_SSM_MODEL_HPP
#define PFL_SSM_MODEL_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "pfl/common.hpp"
#include "pfl/num/rng.hpp"
#include "pfl/ssm/noise.hpp"

namespace pfl::ssm {

enum class Nonlinearity { kIdentity, kAbsoluteValue, kSir };

Nonlinearity nonlinearity_from_string(const std::string& tag);
std::string to_string(Nonlinearity phi);

struct SirParams {
  double beta = 5e-4;   // infection rate, per person per time unit
  double gamma = 0.04;  // removal rate, per time unit
  double delta = 0.7;   // Euler step, time units
};

// Euler-discretized SIR increments (dS, dI, dR) for state (S, I, R). The
// three increments sum to zero when added as (dS + dR) + dI.
Vector sir_increments(const Vector& state, const SirParams& p);

// One SIR transition with additive noise. No clamping at zero: the filter is
// expected to cope with slightly negative populations.
Vector sir_step(const Vector& state, const SirParams& p, const Vector& noise);

// Initial-state law: per-component independent with common variance. The
// exponential family is shifted so that each component has the stated mean.
struct InitialLaw {
  NoiseFamily family = NoiseFamily::kGaussian;
  Vector mean;
  double variance = 1.0;

  Vector sample(num::Rng& rng) const;
};

// Generative description of one state-space system:
//   x_t = phi(A x_{t-1}) + v_t,   y_t = C x_t + w_t  (y_0 measured on x_0).
struct ModelSpec {
  Index n = 0;  // state dimension
  Index m = 0;  // measurement dimension
  Matrix a;     // N x N
  Matrix c;     // M x N
  Nonlinearity phi = Nonlinearity::kIdentity;
  SirParams sir;  // used only when phi == kSir
  NoiseLaw state_noise;
  NoiseLaw measurement_noise;
  InitialLaw initial;

  void validate() const;
  bool linear_gaussian() const {
    return phi == Nonlinearity::kIdentity &&
           state_noise.family == NoiseFamily::kGaussian &&
           measurement_noise.family == NoiseFamily::kGaussian &&
           initial.family == NoiseFamily::kGaussian;
  }

  Vector apply_phi(const Vector& v) const;
  // phi(A x_prev); the deterministic part of the transition.
  Vector transition_mean(const Vector& x_prev) const;
  // Column-wise version for a batch of states.
  Matrix transition_mean_batch(const Matrix& x_prev) const;
};

struct Trajectory {
  std::vector<Vector> states;        // x_0..x_T
  std::vector<Vector> measurements;  // y_0..y_T
  Index horizon() const { return static_cast<Index>(states.size()) - 1; }
};

// Simulate x_{0:T}, y_{0:T}.
Trajectory simulate(const ModelSpec& model, Index horizon, num::Rng& rng);

// CSV with header `t, x_1..x_N, y_1..y_M`; missing measurements left blank.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace pfl::ssm

#endif  // PFL_SSM_MODEL_HPP
