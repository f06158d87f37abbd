#include "pfl/ssm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pfl/num/linalg.hpp"

namespace pfl::ssm {

Matrix build_knn_graph(Index n, int k, num::Rng& rng) {
  if (n < 2) throw ConfigError("knn graph: need at least 2 nodes");
  if (k < 1 || k > n - 1) throw ConfigError("knn graph: invalid neighbor count");

  Matrix coords(n, 2);
  for (Index i = 0; i < n; ++i) {
    coords(i, 0) = rng.uniform();
    coords(i, 1) = rng.uniform();
  }

  Matrix weights = Matrix::Zero(n, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const double da = (coords.row(a) - coords.row(i)).squaredNorm();
      const double db = (coords.row(b) - coords.row(i)).squaredNorm();
      if (da != db) return da < db;
      return a < b;  // deterministic tie-break
    });
    // order[0] is node i itself (distance zero).
    for (int j = 1; j <= k; ++j) {
      const Index nb = order[static_cast<std::size_t>(j)];
      const double d2 = (coords.row(nb) - coords.row(i)).squaredNorm();
      const double w = std::exp(-d2);
      // Keep the edge if either endpoint selects the other.
      weights(i, nb) = w;
      weights(nb, i) = w;
    }
  }
  weights.diagonal().setZero();

  const double norm = num::spectral_norm(weights);
  if (norm <= 0.0) throw NumericalError("knn graph: zero spectral norm");
  return weights / norm;
}

Matrix build_geometric_graph(Index n, num::Rng& rng) {
  if (n < 4) throw ConfigError("geometric graph: need N >= 4 for 3 nearest neighbors");
  return build_knn_graph(n, 3, rng);
}

Matrix build_measurement_matrix(Index n, Index m) {
  if (m < 1 || m > n) throw ConfigError("measurement matrix: need 1 <= M <= N");
  Matrix c = Matrix::Zero(m, n);
  for (Index i = 0; i < m; ++i) c(i, i) = 1.0;
  for (Index i = 0; i < std::min(m, n - m); ++i) c(i, m + i) = 1.0;
  return c / num::spectral_norm(c);
}

double variance_from_snr(const Vector& mu0, double snr_db) {
  const double energy = mu0.squaredNorm();
  if (energy <= 0.0) throw ConfigError("variance_from_snr: zero initial mean");
  return energy / std::pow(10.0, snr_db / 10.0);
}

Scenario scenario_from_string(const std::string& tag) {
  if (tag == "linear-gaussian") return Scenario::kLinearGaussian;
  if (tag == "nonlinear-gaussian") return Scenario::kNonlinearGaussian;
  if (tag == "linear-exponential") return Scenario::kLinearExponential;
  if (tag == "linear-uniform") return Scenario::kLinearUniform;
  if (tag == "sir") return Scenario::kSir;
  throw ConfigError("unknown scenario: " + tag);
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kLinearGaussian:
      return "linear-gaussian";
    case Scenario::kNonlinearGaussian:
      return "nonlinear-gaussian";
    case Scenario::kLinearExponential:
      return "linear-exponential";
    case Scenario::kLinearUniform:
      return "linear-uniform";
    case Scenario::kSir:
      return "sir";
  }
  throw ConfigError("unknown scenario tag");
}

bool is_graph_scenario(Scenario s) { return s != Scenario::kSir; }

namespace {

ModelSpec make_graph_model(Scenario s, Index n, double snr_db, num::Rng& rng) {
  if (n < 4) throw ConfigError("graph scenario: N must be at least 4");
  ModelSpec model;
  model.n = n;
  model.m = n - 2;
  model.a = build_geometric_graph(n, rng);
  model.c = build_measurement_matrix(n, model.m);
  model.phi = s == Scenario::kNonlinearGaussian ? Nonlinearity::kAbsoluteValue
                                                : Nonlinearity::kIdentity;

  NoiseFamily family = NoiseFamily::kGaussian;
  if (s == Scenario::kLinearExponential) family = NoiseFamily::kShiftedExponential;
  if (s == Scenario::kLinearUniform) family = NoiseFamily::kCenteredUniform;

  model.initial.family = NoiseFamily::kGaussian;
  model.initial.mean = Vector::Ones(n);
  model.initial.variance = 1.0;

  const double sigma2 = variance_from_snr(model.initial.mean, snr_db);
  model.state_noise = NoiseLaw{family, sigma2};
  model.measurement_noise = NoiseLaw{family, sigma2};
  model.validate();
  return model;
}

ModelSpec make_sir_model() {
  ModelSpec model;
  model.n = 3;
  model.m = 2;
  model.a = Matrix::Identity(3, 3);
  // Rows 1 and 3 of the identity: S and R are measured, I is hidden.
  model.c = Matrix::Zero(2, 3);
  model.c(0, 0) = 1.0;
  model.c(1, 2) = 1.0;
  model.phi = Nonlinearity::kSir;
  model.sir = SirParams{};

  model.initial.family = NoiseFamily::kShiftedExponential;
  model.initial.mean = (Vector(3) << 997.0, 3.0, 0.0).finished();
  model.initial.variance = 500.0;

  model.state_noise = NoiseLaw{NoiseFamily::kShiftedExponential, 200.0};
  model.measurement_noise = NoiseLaw{NoiseFamily::kShiftedExponential, 2500.0};
  model.validate();
  return model;
}

}  // namespace

ModelSpec make_scenario_model(Scenario s, Index n, double snr_db, num::Rng& rng) {
  if (s == Scenario::kSir) {
    if (n != 3) throw ConfigError("sir scenario: N is fixed at 3");
    return make_sir_model();
  }
  return make_graph_model(s, n, snr_db, rng);
}

}  // namespace pfl::ssm
