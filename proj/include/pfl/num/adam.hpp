#ifndef PFL_NUM_ADAM_HPP
#define PFL_NUM_ADAM_HPP

#include <cstdint>
#include <string>

#include "pfl/common.hpp"

namespace pfl::num {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-tensor moment estimates; shapes follow the parameter.
struct AdamSlot {
  Matrix m;
  Matrix v;
};

struct AdamState {
  AdamParams hp;
  std::int64_t t = 0;  // completed steps
};

// One bias-corrected minimization step on a single tensor. `state.t` must
// already be incremented for this step (t >= 1). Throws NumericalError naming
// the parameter on a non-finite gradient.
void adam_apply(const AdamState& state, AdamSlot& slot, Matrix& param, const Matrix& grad,
                const std::string& name);

}  // namespace pfl::num

#endif  // PFL_NUM_ADAM_HPP
