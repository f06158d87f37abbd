#ifndef PFL_PF_ENSEMBLE_HPP
#define PFL_PF_ENSEMBLE_HPP

#include <functional>
#include <vector>

#include "pfl/common.hpp"
#include "pfl/num/rng.hpp"

namespace pfl::pf {

// Opaque per-particle proposal memory, stored column-per-particle. Empty for
// memoryless families; an (h, c) pair for the recurrent one.
struct BatchMemory {
  Matrix h;
  Matrix c;
  bool empty() const { return h.size() == 0 && c.size() == 0; }
  void reorder(const std::vector<Index>& idx) {
    if (empty()) return;
    auto take = [&](const Matrix& m) {
      Matrix out(m.rows(), static_cast<Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = m.col(idx[j]);
      return out;
    };
    if (h.size() != 0) h = take(h);
    if (c.size() != 0) c = take(c);
  }
};

// K particles with log-domain weights; states are columns.
struct ParticleEnsemble {
  Matrix states;       // N x K
  Vector log_weights;  // K
  BatchMemory memory;
  Index t = -1;  // time index of the last absorbed measurement

  Index particles() const { return states.cols(); }
  Index dim() const { return states.rows(); }
};

// Normalized weights from log weights via log-sum-exp. Throws
// DegeneracyError when every log weight is -inf.
Vector normalize_weights(const Vector& log_weights);

// 1 / sum(w^2) for normalized weights.
double effective_sample_size(const Vector& weights);

// Multinomial resampling: K draws by weight, states and memories copied,
// log weights reset to -log(K).
void resample(ParticleEnsemble& ensemble, num::Rng& rng);

// Multinomial index draws (sorted-uniform merge; O(K + draws)).
std::vector<Index> multinomial_indices(const Vector& weights, Index draws, num::Rng& rng);

// Weighted average sum_k w_k f(x_k); the default functional is the current
// state itself.
Vector estimate(const ParticleEnsemble& ensemble);
Vector estimate(const ParticleEnsemble& ensemble,
                const std::function<Vector(const Vector&)>& f);

}  // namespace pfl::pf

#endif  // PFL_PF_ENSEMBLE_HPP
