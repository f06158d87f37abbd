#include "pfl/num/adam.hpp"

#include <cmath>

namespace pfl::num {

void adam_apply(const AdamState& state, AdamSlot& slot, Matrix& param, const Matrix& grad,
                const std::string& name) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols())
    throw DimensionError("adam: gradient shape mismatch for " + name);
  if (!grad.allFinite()) throw NumericalError("adam: non-finite gradient for " + name);
  if (state.t < 1) throw ContractError("adam: step counter must be >= 1");

  if (slot.m.size() == 0) {
    slot.m = Matrix::Zero(param.rows(), param.cols());
    slot.v = Matrix::Zero(param.rows(), param.cols());
  }
  const AdamParams& hp = state.hp;
  slot.m = hp.beta1 * slot.m + (1.0 - hp.beta1) * grad;
  slot.v = hp.beta2 * slot.v + (1.0 - hp.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  param.array() -=
      hp.lr * (slot.m.array() / c1) / ((slot.v.array() / c2).sqrt() + hp.eps);
}

}  // namespace pfl::num
