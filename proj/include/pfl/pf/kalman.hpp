#ifndef PFL_PF_KALMAN_HPP
#define PFL_PF_KALMAN_HPP

#include <vector>

#include "pfl/common.hpp"
#include "pfl/ssm/model.hpp"

namespace pfl::pf {

struct KalmanState {
  Vector mean;
  Matrix cov;
};

// Exact posterior recursion for linear-Gaussian models; t = 0 is a
// measurement update of the prior. Throws ContractError on any model that is
// not linear-Gaussian.
std::vector<KalmanState> kalman_filter(const ssm::ModelSpec& model,
                                       const std::vector<Vector>& measurements);

}  // namespace pfl::pf

#endif  // PFL_PF_KALMAN_HPP
