#ifndef PFL_SSM_SCENARIO_HPP
#define PFL_SSM_SCENARIO_HPP

#include <string>

#include "pfl/common.hpp"
#include "pfl/num/rng.hpp"
#include "pfl/ssm/model.hpp"

namespace pfl::ssm {

// Adjacency of a weighted k-nearest-neighbor geometric graph on [0,1]^2 with
// Gaussian kernel weights, symmetrized (union of neighbor choices), zero
// diagonal, scaled to unit spectral norm.
Matrix build_knn_graph(Index n, int k, num::Rng& rng);

// The 3-nearest-neighbor variant used by the graph scenarios; requires N >= 4.
Matrix build_geometric_graph(Index n, num::Rng& rng);

// C = [I_{MxM} | I_{Mx(N-M)}] scaled to unit spectral norm.
Matrix build_measurement_matrix(Index n, Index m);

// sigma^2 such that 10 log10(||mu0||^2 / sigma^2) equals the requested SNR.
double variance_from_snr(const Vector& mu0, double snr_db);

enum class Scenario {
  kLinearGaussian,
  kNonlinearGaussian,
  kLinearExponential,
  kLinearUniform,
  kSir,
};

Scenario scenario_from_string(const std::string& tag);
std::string to_string(Scenario s);
bool is_graph_scenario(Scenario s);

// Model for one scenario cell. Graph scenarios take the state dimension and
// use M = N - 2; the SIR scenario has fixed dimensions (N=3, M=2).
ModelSpec make_scenario_model(Scenario s, Index n, double snr_db, num::Rng& rng);

}  // namespace pfl::ssm

#endif  // PFL_SSM_SCENARIO_HPP
