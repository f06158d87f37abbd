#ifndef PFL_PROP_LEARNED_HPP
#define PFL_PROP_LEARNED_HPP

#include <memory>
#include <string>
#include <vector>

#include "pfl/pf/proposal.hpp"
#include "pfl/prop/engines.hpp"
#include "pfl/prop/gaussian_head.hpp"
#include "pfl/ssm/scenario.hpp"

namespace pfl::prop {

enum class Family { kMlp, kRnn, kGnn, kPsi };

Family family_from_string(const std::string& tag);
std::string to_string(Family family);

struct ProposalHyper {
  std::vector<int> mlp_hidden{256, 512, 1024};
  int lstm_hidden = 1024;
  std::vector<int> gnn_features{256, 512, 1024};  // hidden widths; output width is 1
  int gnn_order = 3;
  int psi_layers = 9;
};

// Paper-scale hyperparameters per scenario (the SIR system uses its own).
ProposalHyper default_hyper(ssm::Scenario scenario);

// Log of the density floor used by the invertible-transform family for points
// outside its image; keeps weights finite while heavily penalizing them.
constexpr double kDensityFloorLog = -27.631021115928547;  // log(1e-12)

// Train-time recurrent state as tape handles; invalid for memoryless families.
struct TrainMemory {
  num::Var h;
  num::Var c;
};

// Common base of the learnable sampling distributions. At filter time the
// parameters are read from an attached (trained) store; at train time the
// reparametrized path runs on a tape through the same architecture code.
class LearnedProposal : public pf::Proposal {
 public:
  LearnedProposal(Index n, Index m, ProposalHyper hyper, const ParamStore* store)
      : n_(n), m_(m), hyper_(std::move(hyper)), store_(store) {}

  virtual Family family() const = 0;
  std::string name() const override { return to_string(family()); }

  // Create every tensor the family needs to cover proposals for t = 1..horizon.
  virtual void init_params(ParamStore& store, Index horizon, num::Rng& rng) const = 0;

  // Reparametrized batched draw for the training loop. x_prev is an N x K
  // handle; the result is N x K. When log_pi is non-null it receives the
  // (detached) proposal log densities at the drawn values.
  virtual num::Var sample_reparam(TapeEngine& e, const ssm::ModelSpec& model, Index t,
                                  num::Var x_prev, const Vector& y_t, TrainMemory& mem,
                                  num::Rng& rng, Vector* log_pi) const = 0;

  virtual TrainMemory init_train_memory(TapeEngine& /*e*/, Index /*particles*/) const {
    return {};
  }

 protected:
  const ParamStore& store() const {
    if (!store_) throw StoreError(name() + ": no parameter store attached");
    return *store_;
  }
  Index n_;
  Index m_;
  ProposalHyper hyper_;
  const ParamStore* store_;
};

// Per-time-step fully connected mean network plus a time-shared covariance
// network feeding the kernel head.
class MlpProposal : public LearnedProposal {
 public:
  using LearnedProposal::LearnedProposal;
  Family family() const override { return Family::kMlp; }
  void init_params(ParamStore& store, Index horizon, num::Rng& rng) const override;
  void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev, const Vector& y_t,
              pf::BatchMemory& memory, num::Rng& rng, Matrix& x_out,
              Vector& log_pi_out) const override;
  num::Var sample_reparam(TapeEngine& e, const ssm::ModelSpec& model, Index t, num::Var x_prev,
                          const Vector& y_t, TrainMemory& mem, num::Rng& rng,
                          Vector* log_pi) const override;
};

// Time-shared LSTM whose hidden state feeds affine mean/covariance heads.
class RnnProposal : public LearnedProposal {
 public:
  using LearnedProposal::LearnedProposal;
  Family family() const override { return Family::kRnn; }
  void init_params(ParamStore& store, Index horizon, num::Rng& rng) const override;
  pf::BatchMemory init_memory(Index particles) const override;
  TrainMemory init_train_memory(TapeEngine& e, Index particles) const override;
  void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev, const Vector& y_t,
              pf::BatchMemory& memory, num::Rng& rng, Matrix& x_out,
              Vector& log_pi_out) const override;
  num::Var sample_reparam(TapeEngine& e, const ssm::ModelSpec& model, Index t, num::Var x_prev,
                          const Vector& y_t, TrainMemory& mem, num::Rng& rng,
                          Vector* log_pi) const override;
};

// Per-time-step graph-convolutional mean network on S = A, plus a shared
// graph covariance network; learnable adaptation matrices map measurements
// onto the node dimension.
class GnnProposal : public LearnedProposal {
 public:
  using LearnedProposal::LearnedProposal;
  Family family() const override { return Family::kGnn; }
  void init_params(ParamStore& store, Index horizon, num::Rng& rng) const override;
  void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev, const Vector& y_t,
              pf::BatchMemory& memory, num::Rng& rng, Matrix& x_out,
              Vector& log_pi_out) const override;
  num::Var sample_reparam(TapeEngine& e, const ssm::ModelSpec& model, Index t, num::Var x_prev,
                          const Vector& y_t, TrainMemory& mem, num::Rng& rng,
                          Vector* log_pi) const override;
};

// Arbitrary invertible transform of a uniform draw; the density comes from
// the change-of-variables formula via layer-by-layer inversion.
class PsiProposal : public LearnedProposal {
 public:
  using LearnedProposal::LearnedProposal;
  Family family() const override { return Family::kPsi; }
  void init_params(ParamStore& store, Index horizon, num::Rng& rng) const override;
  void sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev, const Vector& y_t,
              pf::BatchMemory& memory, num::Rng& rng, Matrix& x_out,
              Vector& log_pi_out) const override;
  num::Var sample_reparam(TapeEngine& e, const ssm::ModelSpec& model, Index t, num::Var x_prev,
                          const Vector& y_t, TrainMemory& mem, num::Rng& rng,
                          Vector* log_pi) const override;

  // log pi(x | x_prev, y) by inverting the transform; returns the density
  // floor for points outside the image or with u outside the unit box.
  double logpdf(Index t, const Vector& x_prev, const Vector& y, const Vector& x) const;
};

std::unique_ptr<LearnedProposal> make_learned_proposal(Family family, const ssm::ModelSpec& model,
                                                       const ProposalHyper& hyper,
                                                       const ParamStore* store);

}  // namespace pfl::prop

#endif  // PFL_PROP_LEARNED_HPP
