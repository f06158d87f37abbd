#include "pfl/pf/ensemble.hpp"

#include <cmath>
#include <functional>

#include "pfl/num/linalg.hpp"

namespace pfl::pf {

Vector normalize_weights(const Vector& log_weights) {
  if (log_weights.size() < 1) throw ContractError("normalize_weights: empty ensemble");
  const double ls = num::logsumexp(log_weights);
  Vector w(log_weights.size());
  for (Index k = 0; k < log_weights.size(); ++k) w(k) = std::exp(log_weights(k) - ls);
  return w;
}

double effective_sample_size(const Vector& weights) {
  const double s = weights.squaredNorm();
  if (s <= 0.0) throw ContractError("effective_sample_size: weights not normalized");
  return 1.0 / s;
}

std::vector<Index> multinomial_indices(const Vector& weights, Index draws, num::Rng& rng) {
  const Index k = weights.size();
  // Sorted uniforms via cumulative exponential spacings, merged against the
  // cumulative weights in one pass.
  std::vector<double> points(static_cast<std::size_t>(draws) + 1);
  double acc = 0.0;
  for (auto& p : points) {
    acc += rng.exponential(1.0);
    p = acc;
  }
  const double total = points.back();

  std::vector<Index> idx(static_cast<std::size_t>(draws));
  double cum = weights(0);
  Index cell = 0;
  for (Index d = 0; d < draws; ++d) {
    const double u = points[static_cast<std::size_t>(d)] / total;
    while (u > cum && cell + 1 < k) {
      ++cell;
      cum += weights(cell);
    }
    idx[static_cast<std::size_t>(d)] = cell;
  }
  return idx;
}

void resample(ParticleEnsemble& ensemble, num::Rng& rng) {
  const Index k = ensemble.particles();
  const Vector w = normalize_weights(ensemble.log_weights);
  const std::vector<Index> idx = multinomial_indices(w, k, rng);

  Matrix picked(ensemble.dim(), k);
  for (Index j = 0; j < k; ++j) picked.col(j) = ensemble.states.col(idx[static_cast<std::size_t>(j)]);
  ensemble.states = std::move(picked);
  ensemble.memory.reorder(idx);
  ensemble.log_weights.setConstant(-std::log(static_cast<double>(k)));
}

Vector estimate(const ParticleEnsemble& ensemble) {
  return ensemble.states * normalize_weights(ensemble.log_weights);
}

Vector estimate(const ParticleEnsemble& ensemble,
                const std::function<Vector(const Vector&)>& f) {
  const Vector w = normalize_weights(ensemble.log_weights);
  Vector acc = w(0) * f(ensemble.states.col(0));
  for (Index k = 1; k < ensemble.particles(); ++k) acc += w(k) * f(ensemble.states.col(k));
  return acc;
}

}  // namespace pfl::pf
