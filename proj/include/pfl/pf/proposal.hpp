#ifndef PFL_PF_PROPOSAL_HPP
#define PFL_PF_PROPOSAL_HPP

#include <optional>
#include <string>

#include "pfl/common.hpp"
#include "pfl/num/rng.hpp"
#include "pfl/pf/ensemble.hpp"
#include "pfl/ssm/model.hpp"

namespace pfl::pf {

// One-step sampling distribution pi(x_t | x_{t-1}, y_t). Implementations are
// batched over particles: states are columns of an N x K matrix.
class Proposal {
 public:
  virtual ~Proposal() = default;

  virtual std::string name() const = 0;

  // Initial recurrent state for K particles; empty by default.
  virtual BatchMemory init_memory(Index /*particles*/) const { return {}; }

  // Draw x_t for every particle and evaluate log pi at the draw.
  // `memory` is updated in place. `t` is the time index being proposed.
  virtual void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev,
                      const Vector& y_t, BatchMemory& memory, num::Rng& rng, Matrix& x_out,
                      Vector& log_pi_out) const = 0;

  // Closed-form incremental log weight, when the family defines one (the
  // minimum-degeneracy family uses p(y_t | x_{t-1})). When absent the engine
  // applies the generic three-term rule.
  virtual std::optional<Vector> closed_form_log_increment(const ssm::ModelSpec& /*model*/,
                                                          Index /*t*/, const Matrix& /*x_prev*/,
                                                          const Vector& /*y_t*/) const {
    return std::nullopt;
  }
};

}  // namespace pfl::pf

#endif  // PFL_PF_PROPOSAL_HPP
