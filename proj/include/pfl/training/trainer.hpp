#ifndef PFL_TRAINING_TRAINER_HPP
#define PFL_TRAINING_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pfl/prop/learned.hpp"

namespace pfl::training {

struct TrainConfig {
  int epochs = 200;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  Index particles = 10;        // rollout particles per step
  double clip_norm = 10.0;     // global gradient-norm clip
  double threshold_ratio = 1.0 / 3.0;  // resampling trigger during rollouts
  std::uint64_t seed = 0;
  // Hard-support noise laws make poor training objectives: the centered
  // uniform is flat (zero gradient a.e.) and the shifted exponential peaks on
  // its support boundary, so gradient steps chase samples over the cliff into
  // the zero-gradient floor region. When set, the training loss swaps both for
  // the moment-matched Gaussian; test-time weighting stays exact. Recorded in
  // the report notes.
  bool gaussian_surrogate_loss = true;

  void validate() const;
};

struct TrainReport {
  std::vector<double> losses;       // one per epoch
  std::vector<double> grad_norms;   // pre-clip global norms
  std::vector<std::int64_t> floor_hits;
  double wall_seconds = 0.0;
  std::uint64_t param_checksum = 0;
  std::string notes;
};

struct TrainResult {
  prop::ParamStore store;
  TrainReport report;
};

// Negative log-joint of the reparametrized particles under the model:
//   -sum_k [ log p(x_t^k | x_{t-1}^k) + log p(y_t | x_t^k) ],
// with out-of-support contributions clamped at the density floor (counted on
// the tape). `gaussian_surrogate` swaps hard-support noise terms for the
// moment-matched Gaussian.
num::Var step_loss(num::Tape& tape, const ssm::ModelSpec& model, num::Var x_prev, num::Var x_t,
                   const Vector& y_t, bool gaussian_surrogate = false);

// Unsupervised likelihood-maximization training from measurements alone: per
// epoch, particles roll through t = 0..T with reparametrized draws, the
// per-step losses accumulate, and one Adam update is applied. Resampling
// during the rollout is a stop-gradient re-indexing. Deterministic given the
// seed.
TrainResult train(const ssm::ModelSpec& model, const std::vector<Vector>& measurements,
                  prop::Family family, const prop::ProposalHyper& hyper, const TrainConfig& config);

// CSV: `epoch, loss, grad_norm, floor_hits`.
void write_training_log_csv(std::ostream& os, const TrainReport& report);

}  // namespace pfl::training

#endif  // PFL_TRAINING_TRAINER_HPP
