#include "pfl/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "pfl/pf/engine.hpp"

namespace pfl::training {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train: epochs must be non-negative");
  if (lr <= 0.0) throw ConfigError("train: learning rate must be positive");
  if (particles < 1) throw ConfigError("train: need at least one rollout particle");
  if (clip_norm <= 0.0) throw ConfigError("train: clip norm must be positive");
  if (threshold_ratio <= 0.0 || threshold_ratio > 1.0)
    throw ConfigError("train: threshold ratio must lie in (0, 1]");
}

namespace {

num::Var phi_on_tape(num::Tape& tape, const ssm::ModelSpec& model, num::Var v) {
  switch (model.phi) {
    case ssm::Nonlinearity::kIdentity:
      return v;
    case ssm::Nonlinearity::kAbsoluteValue:
      return tape.abs(v);
    case ssm::Nonlinearity::kSir: {
      num::Var s = tape.slice_rows(v, 0, 1);
      num::Var i = tape.slice_rows(v, 1, 1);
      num::Var r = tape.slice_rows(v, 2, 1);
      num::Var infections =
          tape.scale(tape.hadamard(s, i), model.sir.beta * model.sir.delta);
      num::Var removals = tape.scale(i, model.sir.gamma * model.sir.delta);
      return tape.concat_rows({tape.sub(s, infections),
                               tape.add(i, tape.sub(infections, removals)),
                               tape.add(r, removals)});
    }
  }
  throw ConfigError("unknown nonlinearity tag");
}

num::Var noise_loglik(num::Tape& tape, const ssm::NoiseLaw& law, num::Var resid,
                      bool gaussian_surrogate) {
  switch (law.family) {
    case ssm::NoiseFamily::kGaussian:
      return tape.loglik_gauss_iso(resid, law.sigma2);
    case ssm::NoiseFamily::kShiftedExponential:
      if (gaussian_surrogate) return tape.loglik_gauss_iso(resid, law.sigma2);
      return tape.loglik_shifted_exp(resid, law.sigma(), prop::kDensityFloorLog);
    case ssm::NoiseFamily::kCenteredUniform:
      if (gaussian_surrogate) return tape.loglik_gauss_iso(resid, law.sigma2);
      return tape.loglik_centered_uniform(resid, law.sigma(), prop::kDensityFloorLog);
  }
  throw ConfigError("unknown noise family tag");
}

// -inf log densities become the density floor for rollout weights so a bad
// early-training draw cannot kill the whole ensemble.
double floored(double log_density) {
  return std::isinf(log_density) ? prop::kDensityFloorLog : log_density;
}

}  // namespace

num::Var step_loss(num::Tape& tape, const ssm::ModelSpec& model, num::Var x_prev, num::Var x_t,
                   const Vector& y_t, bool gaussian_surrogate) {
  if (tape.val(x_prev).rows() != model.n || tape.val(x_t).rows() != model.n)
    throw DimensionError("step_loss: particle dimension mismatch");
  const Index k = tape.val(x_t).cols();
  num::Var mean = phi_on_tape(tape, model, tape.matmul(tape.constant(model.a), x_prev));
  num::Var trans_resid = tape.sub(x_t, mean);
  num::Var trans = noise_loglik(tape, model.state_noise, trans_resid, gaussian_surrogate);

  num::Var y_rep = tape.constant(y_t.replicate(1, k));
  num::Var meas_resid = tape.sub(y_rep, tape.matmul(tape.constant(model.c), x_t));
  num::Var meas = noise_loglik(tape, model.measurement_noise, meas_resid, gaussian_surrogate);

  return tape.scale(tape.add(trans, meas), -1.0);
}

TrainResult train(const ssm::ModelSpec& model, const std::vector<Vector>& measurements,
                  prop::Family family, const prop::ProposalHyper& hyper,
                  const TrainConfig& config) {
  config.validate();
  model.validate();
  if (measurements.empty()) throw ConfigError("train: no measurements");
  const Index horizon = static_cast<Index>(measurements.size()) - 1;
  const Index k = config.particles;

  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  auto proposal = prop::make_learned_proposal(family, model, hyper, &result.store);
  num::Rng root(config.seed);
  num::Rng init_rng = root.substream(0);
  proposal->init_params(result.store, horizon, init_rng);

  num::AdamState adam;
  adam.hp.lr = config.lr;
  adam.hp.beta1 = config.beta1;
  adam.hp.beta2 = config.beta2;

  const bool smooth = config.smooth_uniform_loss &&
                      (model.state_noise.family == ssm::NoiseFamily::kCenteredUniform ||
                       model.measurement_noise.family == ssm::NoiseFamily::kCenteredUniform);
  if (smooth)
    result.report.notes =
        "uniform noise terms in the training loss replaced by moment-matched gaussians";

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    num::Rng epoch_rng = root.substream(1).substream(static_cast<std::uint64_t>(epoch));
    num::Tape tape;
    prop::ParamBinding bind(tape, result.store);
    prop::TapeEngine engine(tape, bind);

    // t = 0: draw from the initial law and absorb y_0 (no learnable path).
    Matrix x0(model.n, k);
    for (Index j = 0; j < k; ++j) x0.col(j) = model.initial.sample(epoch_rng);
    num::Var x = tape.constant(x0);
    prop::TrainMemory memory = proposal->init_train_memory(engine, k);
    Vector log_w = Vector::Constant(k, -std::log(static_cast<double>(k)));
    for (Index j = 0; j < k; ++j)
      log_w(j) += floored(pf::measurement_logpdf(model, x0.col(j), measurements[0]));

    num::Var loss = tape.scalar(0.0);
    auto maybe_resample = [&]() {
      const Vector w = pf::normalize_weights(log_w);
      if (pf::effective_sample_size(w) <
          config.threshold_ratio * static_cast<double>(k)) {
        const std::vector<Index> idx = pf::multinomial_indices(w, k, epoch_rng);
        // Stop-gradient re-indexing: the ancestor choice itself is not
        // differentiated, values keep their provenance.
        x = tape.select_cols(x, idx);
        if (memory.h.valid()) {
          memory.h = tape.select_cols(memory.h, idx);
          memory.c = tape.select_cols(memory.c, idx);
        }
        log_w.setConstant(-std::log(static_cast<double>(k)));
      }
    };
    maybe_resample();

    for (Index t = 1; t <= horizon; ++t) {
      Vector log_pi;
      num::Var x_new = proposal->sample_reparam(engine, model, t, x, measurements[static_cast<std::size_t>(t)],
                                                memory, epoch_rng, &log_pi);
      loss = tape.add(loss, step_loss(tape, model, x, x_new,
                                      measurements[static_cast<std::size_t>(t)], smooth));
      const Matrix& xp = tape.val(x);
      const Matrix& xn = tape.val(x_new);
      for (Index j = 0; j < k; ++j) {
        const double inc =
            floored(pf::measurement_logpdf(model, xn.col(j), measurements[static_cast<std::size_t>(t)])) +
            floored(pf::transition_logpdf(model, xp.col(j), xn.col(j))) - log_pi(j);
        log_w(j) += inc;
      }
      x = x_new;
      maybe_resample();
    }

    const double loss_value = tape.val(loss)(0, 0);
    if (!std::isfinite(loss_value))
      throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));

    tape.backward(loss);
    bind.harvest(result.store);
    const double grad_norm = result.store.grad_global_norm();
    if (grad_norm > config.clip_norm)
      result.store.scale_grads(config.clip_norm / grad_norm);

    adam.t += 1;
    for (const std::string& name : result.store.names())
      num::adam_apply(adam, result.store.adam_slot(name), result.store.mutable_value(name),
                      result.store.grad(name), name);

    result.report.losses.push_back(loss_value);
    result.report.grad_norms.push_back(grad_norm);
    result.report.floor_hits.push_back(tape.floor_hits());
  }

  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.report.param_checksum = result.store.checksum();
  return result;
}

void write_training_log_csv(std::ostream& os, const TrainReport& report) {
  os << "epoch,loss,grad_norm,floor_hits\n";
  os.precision(17);
  for (std::size_t e = 0; e < report.losses.size(); ++e)
    os << e << "," << report.losses[e] << "," << report.grad_norms[e] << ","
       << report.floor_hits[e] << "\n";
}

}  // namespace pfl::training
