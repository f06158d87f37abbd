#include "pfl/prop/learned.hpp"

#include <cmath>

#include "pfl/prop/arch.hpp"

namespace pfl::prop {

Family family_from_string(const std::string& tag) {
  if (tag == "mlp") return Family::kMlp;
  if (tag == "rnn") return Family::kRnn;
  if (tag == "gnn") return Family::kGnn;
  if (tag == "psi") return Family::kPsi;
  throw ConfigError("unknown proposal family: " + tag);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::kMlp:
      return "mlp";
    case Family::kRnn:
      return "rnn";
    case Family::kGnn:
      return "gnn";
    case Family::kPsi:
      return "psi";
  }
  throw ConfigError("unknown proposal family tag");
}

ProposalHyper default_hyper(ssm::Scenario scenario) {
  ProposalHyper h;
  if (scenario == ssm::Scenario::kSir) {
    h.mlp_hidden = {512, 256, 128, 32};
    h.lstm_hidden = 2048;
    h.psi_layers = 10;
  }
  return h;
}

namespace {

// ---- parameter initialization ------------------------------------------

void init_dense(ParamStore& store, const std::string& prefix, const std::vector<Index>& widths,
                num::Rng& rng) {
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    store.create(layer_name(prefix, static_cast<int>(l), "W"),
                 init_weight(widths[l + 1], widths[l], rng));
    store.create(layer_name(prefix, static_cast<int>(l), "b"), Matrix::Zero(widths[l + 1], 1));
  }
}

std::vector<Index> dense_widths(Index in, const std::vector<int>& hidden, Index out) {
  std::vector<Index> w;
  w.push_back(in);
  for (int h : hidden) w.push_back(h);
  w.push_back(out);
  return w;
}

void init_graph_stack(ParamStore& store, const std::string& prefix,
                      const std::vector<Index>& features, int order, num::Rng& rng) {
  for (std::size_t l = 0; l + 1 < features.size(); ++l) {
    const std::string block = block_name(prefix, static_cast<int>(l));
    for (int d = 0; d <= order; ++d)
      store.create(block + "/d" + std::to_string(d) + "/W",
                   init_weight(features[l], features[l + 1], rng));
    store.create(block + "/b", Matrix::Zero(features[l + 1], 1));
  }
}

// ---- shared head forwards ------------------------------------------------

template <class E>
std::pair<typename E::V, typename E::V> mlp_heads(E& e, Index t, typename E::V xprev,
                                                  typename E::V yrep, int blocks) {
  typename E::V input = e.concat_rows({xprev, yrep});
  typename E::V mu = dense_head(e, "mlp/mu/t" + std::to_string(t), input, blocks);
  typename E::V zc = dense_head(e, "mlp/sigma", input, blocks);
  return {mu, zc};
}

template <class E>
std::pair<typename E::V, typename E::V> rnn_heads(E& e, typename E::V xprev, typename E::V yrep,
                                                  typename E::V& h, typename E::V& c) {
  typename E::V input = e.concat_rows({xprev, yrep});
  lstm_cell(e, "rnn/lstm", input, h, c);
  typename E::V mu =
      e.add_col_broadcast(e.matmul(e.param("rnn/mu/W"), h), e.param("rnn/mu/b"));
  typename E::V zc =
      e.add_col_broadcast(e.matmul(e.param("rnn/sigma/W"), h), e.param("rnn/sigma/b"));
  return {mu, zc};
}

template <class E>
std::pair<typename E::V, typename E::V> gnn_heads(E& e, Index t, typename E::V s,
                                                  typename E::V xprev, const Vector& y,
                                                  int blocks, int order) {
  typename E::V ycol = e.constant(y);
  const std::string mu_prefix = "gnn/mu/t" + std::to_string(t);
  typename E::V ymu = e.matmul(e.param(mu_prefix + "/Ay"), ycol);
  typename E::V ysig = e.matmul(e.param("gnn/sigma/Ay"), ycol);

  const Index k = e.value(xprev).cols();
  std::vector<typename E::V> mu_cols, zc_cols;
  mu_cols.reserve(k);
  zc_cols.reserve(k);
  for (Index j = 0; j < k; ++j) {
    typename E::V xj = e.col(xprev, j);
    mu_cols.push_back(gnn_head(e, mu_prefix, s, e.concat_cols({xj, ymu}), blocks, order));
    zc_cols.push_back(gnn_head(e, "gnn/sigma", s, e.concat_cols({xj, ysig}), blocks, order));
  }
  return {e.concat_cols(mu_cols), e.concat_cols(zc_cols)};
}

// ---- Gaussian head wrappers ------------------------------------------------

void sample_gaussian_batch(const Matrix& mu, const Matrix& zc, const Matrix& cmat, num::Rng& rng,
                           Matrix& x_out, Vector& log_pi_out) {
  const Index n = mu.rows(), k = mu.cols();
  x_out.resize(n, k);
  log_pi_out.resize(k);
  for (Index j = 0; j < k; ++j) {
    const GaussianProposalParams p =
        make_gaussian_params(mu.col(j), kernel_covariance(zc.col(j), cmat));
    auto [x, lp] = gaussian_sample(p, rng);
    x_out.col(j) = x;
    log_pi_out(j) = lp;
  }
}

num::Var reparam_gaussian_batch(TapeEngine& e, num::Var mu, num::Var zc, num::Var cmat,
                                num::Rng& rng, Vector* log_pi) {
  const Index n = e.value(mu).rows(), k = e.value(mu).cols();
  if (log_pi) log_pi->resize(k);
  num::Var ct = e.transpose(cmat);
  std::vector<num::Var> cols;
  cols.reserve(k);
  for (Index j = 0; j < k; ++j) {
    num::Var kj = e.kernel_gauss(e.col(zc, j));
    num::Var raw = e.matmul(e.matmul(cmat, kj), ct);
    // Symmetrize exactly as the plain head does, then pick the jitter on the
    // detached value so both paths factor the same matrix.
    num::Var sig = e.scale(e.add(raw, e.transpose(raw)), 0.5);
    const num::CholResult pre = num::cholesky(e.value(sig));
    num::Var l = e.cholesky(sig, pre.jitter);
    num::Var x = e.add(e.col(mu, j), e.matmul(l, e.constant(rng.normal_matrix(n, 1))));
    if (log_pi)
      (*log_pi)(j) = num::gaussian_logpdf(e.value(x).col(0), e.value(mu).col(j), e.value(l));
    cols.push_back(x);
  }
  return e.concat_cols(cols);
}

Matrix replicate_cols(const Vector& v, Index k) { return v.replicate(1, k); }

double log_abs_det(const Matrix& w) {
  Eigen::PartialPivLU<Matrix> lu(w);
  double acc = 0.0;
  for (Index i = 0; i < w.rows(); ++i) {
    const double d = std::abs(lu.matrixLU()(i, i));
    if (d == 0.0) throw NumericalError("psi density: singular layer matrix");
    acc += std::log(d);
  }
  return acc;
}

// (W^T W + eps I) w = W^T r; ridge-regularized layer inversion.
Vector ridge_solve(const Matrix& w, const Vector& r) {
  Matrix normal = w.transpose() * w;
  normal.diagonal().array() += 1e-8;
  return normal.ldlt().solve(w.transpose() * r);
}

}  // namespace

// ---- MLP ---------------------------------------------------------------

void MlpProposal::init_params(ParamStore& store, Index horizon, num::Rng& rng) const {
  const auto widths = dense_widths(n_ + m_, hyper_.mlp_hidden, n_);
  for (Index t = 1; t <= horizon; ++t)
    init_dense(store, "mlp/mu/t" + std::to_string(t), widths, rng);
  init_dense(store, "mlp/sigma", widths, rng);
  store.create("mlp/sigma/C", init_weight(n_, n_, rng));
}

void MlpProposal::sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev,
                         const Vector& y_t, pf::BatchMemory& /*memory*/, num::Rng& rng,
                         Matrix& x_out, Vector& log_pi_out) const {
  (void)model;
  PlainEngine e(store());
  const Matrix yrep = replicate_cols(y_t, x_prev.cols());
  const int blocks = static_cast<int>(hyper_.mlp_hidden.size()) + 1;
  auto [mu, zc] = mlp_heads(e, t, &x_prev, &yrep, blocks);
  sample_gaussian_batch(e.value(mu), e.value(zc), store().value("mlp/sigma/C"), rng, x_out,
                        log_pi_out);
}

num::Var MlpProposal::sample_reparam(TapeEngine& e, const ssm::ModelSpec& /*model*/, Index t,
                                     num::Var x_prev, const Vector& y_t, TrainMemory& /*mem*/,
                                     num::Rng& rng, Vector* log_pi) const {
  num::Var yrep = e.constant(replicate_cols(y_t, e.value(x_prev).cols()));
  const int blocks = static_cast<int>(hyper_.mlp_hidden.size()) + 1;
  auto [mu, zc] = mlp_heads(e, t, x_prev, yrep, blocks);
  return reparam_gaussian_batch(e, mu, zc, e.param("mlp/sigma/C"), rng, log_pi);
}

// ---- RNN ---------------------------------------------------------------

void RnnProposal::init_params(ParamStore& store, Index /*horizon*/, num::Rng& rng) const {
  const Index h = hyper_.lstm_hidden;
  store.create("rnn/lstm/Wx", init_weight(4 * h, n_ + m_, rng));
  store.create("rnn/lstm/Wh", init_weight(4 * h, h, rng));
  store.create("rnn/lstm/b", Matrix::Zero(4 * h, 1));
  store.create("rnn/mu/W", init_weight(n_, h, rng));
  store.create("rnn/mu/b", Matrix::Zero(n_, 1));
  store.create("rnn/sigma/W", init_weight(n_, h, rng));
  store.create("rnn/sigma/b", Matrix::Zero(n_, 1));
  store.create("rnn/sigma/C", init_weight(n_, n_, rng));
}

pf::BatchMemory RnnProposal::init_memory(Index particles) const {
  pf::BatchMemory mem;
  mem.h = Matrix::Zero(hyper_.lstm_hidden, particles);
  mem.c = Matrix::Zero(hyper_.lstm_hidden, particles);
  return mem;
}

TrainMemory RnnProposal::init_train_memory(TapeEngine& e, Index particles) const {
  TrainMemory mem;
  mem.h = e.constant(Matrix::Zero(hyper_.lstm_hidden, particles));
  mem.c = e.constant(Matrix::Zero(hyper_.lstm_hidden, particles));
  return mem;
}

void RnnProposal::sample(const ssm::ModelSpec& /*model*/, Index /*t*/, const Matrix& x_prev,
                         const Vector& y_t, pf::BatchMemory& memory, num::Rng& rng, Matrix& x_out,
                         Vector& log_pi_out) const {
  if (memory.h.rows() != hyper_.lstm_hidden || memory.h.cols() != x_prev.cols())
    throw ContractError("rnn proposal: memory shape mismatch");
  PlainEngine e(store());
  const Matrix yrep = replicate_cols(y_t, x_prev.cols());
  PlainEngine::V h = &memory.h;
  PlainEngine::V c = &memory.c;
  auto [mu, zc] = rnn_heads(e, &x_prev, &yrep, h, c);
  sample_gaussian_batch(e.value(mu), e.value(zc), store().value("rnn/sigma/C"), rng, x_out,
                        log_pi_out);
  memory.h = e.value(h);
  memory.c = e.value(c);
}

num::Var RnnProposal::sample_reparam(TapeEngine& e, const ssm::ModelSpec& /*model*/, Index /*t*/,
                                     num::Var x_prev, const Vector& y_t, TrainMemory& mem,
                                     num::Rng& rng, Vector* log_pi) const {
  if (!mem.h.valid() || e.value(mem.h).cols() != e.value(x_prev).cols())
    throw ContractError("rnn proposal: train memory shape mismatch");
  num::Var yrep = e.constant(replicate_cols(y_t, e.value(x_prev).cols()));
  auto [mu, zc] = rnn_heads(e, x_prev, yrep, mem.h, mem.c);
  return reparam_gaussian_batch(e, mu, zc, e.param("rnn/sigma/C"), rng, log_pi);
}

// ---- GNN ---------------------------------------------------------------

void GnnProposal::init_params(ParamStore& store, Index horizon, num::Rng& rng) const {
  std::vector<Index> features;
  features.push_back(2);
  for (int f : hyper_.gnn_features) features.push_back(f);
  features.push_back(1);
  for (Index t = 1; t <= horizon; ++t) {
    const std::string prefix = "gnn/mu/t" + std::to_string(t);
    init_graph_stack(store, prefix, features, hyper_.gnn_order, rng);
    store.create(prefix + "/Ay", init_weight(n_, m_, rng));
  }
  init_graph_stack(store, "gnn/sigma", features, hyper_.gnn_order, rng);
  store.create("gnn/sigma/Ay", init_weight(n_, m_, rng));
  store.create("gnn/sigma/C", init_weight(n_, n_, rng));
}

void GnnProposal::sample(const ssm::ModelSpec& model, Index t, const Matrix& x_prev,
                         const Vector& y_t, pf::BatchMemory& /*memory*/, num::Rng& rng,
                         Matrix& x_out, Vector& log_pi_out) const {
  if (model.a.rows() != n_) throw DimensionError("gnn proposal: graph matrix must be N x N");
  PlainEngine e(store());
  const int blocks = static_cast<int>(hyper_.gnn_features.size()) + 1;
  auto [mu, zc] = gnn_heads(e, t, &model.a, &x_prev, y_t, blocks, hyper_.gnn_order);
  sample_gaussian_batch(e.value(mu), e.value(zc), store().value("gnn/sigma/C"), rng, x_out,
                        log_pi_out);
}

num::Var GnnProposal::sample_reparam(TapeEngine& e, const ssm::ModelSpec& model, Index t,
                                     num::Var x_prev, const Vector& y_t, TrainMemory& /*mem*/,
                                     num::Rng& rng, Vector* log_pi) const {
  num::Var s = e.constant(model.a);
  const int blocks = static_cast<int>(hyper_.gnn_features.size()) + 1;
  auto [mu, zc] = gnn_heads(e, t, s, x_prev, y_t, blocks, hyper_.gnn_order);
  return reparam_gaussian_batch(e, mu, zc, e.param("gnn/sigma/C"), rng, log_pi);
}

// ---- Psi ---------------------------------------------------------------

void PsiProposal::init_params(ParamStore& store, Index horizon, num::Rng& rng) const {
  for (Index t = 1; t <= horizon; ++t) {
    const std::string prefix = "psi/t" + std::to_string(t);
    store.create(prefix + "/A", init_weight(n_, n_, rng));
    store.create(prefix + "/B", init_weight(n_, n_, rng));
    store.create(prefix + "/Cy", init_weight(n_, m_, rng));
    for (int l = 1; l <= hyper_.psi_layers; ++l) {
      store.create(layer_name(prefix, l, "W"), init_weight(n_, n_, rng));
      store.create(layer_name(prefix, l, "b"), Matrix::Zero(n_, 1));
    }
  }
}

void PsiProposal::sample(const ssm::ModelSpec& /*model*/, Index t, const Matrix& x_prev,
                         const Vector& y_t, pf::BatchMemory& /*memory*/, num::Rng& rng,
                         Matrix& x_out, Vector& log_pi_out) const {
  const Index k = x_prev.cols();
  PlainEngine e(store());
  const Matrix u = rng.uniform_matrix(n_, k);
  const Matrix yrep = replicate_cols(y_t, k);
  PlainEngine::V x =
      psi_transform(e, "psi/t" + std::to_string(t), &u, &x_prev, &yrep, hyper_.psi_layers);
  x_out = e.value(x);
  log_pi_out.resize(k);
  for (Index j = 0; j < k; ++j)
    log_pi_out(j) = logpdf(t, x_prev.col(j), y_t, x_out.col(j));
}

num::Var PsiProposal::sample_reparam(TapeEngine& e, const ssm::ModelSpec& /*model*/, Index t,
                                     num::Var x_prev, const Vector& y_t, TrainMemory& /*mem*/,
                                     num::Rng& rng, Vector* log_pi) const {
  const Index k = e.value(x_prev).cols();
  num::Var u = e.constant(rng.uniform_matrix(n_, k));
  num::Var yrep = e.constant(replicate_cols(y_t, k));
  num::Var x = psi_transform(e, "psi/t" + std::to_string(t), u, x_prev, yrep, hyper_.psi_layers);
  if (log_pi) {
    log_pi->resize(k);
    for (Index j = 0; j < k; ++j)
      (*log_pi)(j) = logpdf(t, e.value(x_prev).col(j), y_t, e.value(x).col(j));
  }
  return x;
}

double PsiProposal::logpdf(Index t, const Vector& x_prev, const Vector& y,
                           const Vector& x) const {
  const ParamStore& s = store();
  const std::string prefix = "psi/t" + std::to_string(t);
  constexpr double kBoundsTol = 1e-9;

  Vector z = x;
  double acc = 0.0;
  for (int l = hyper_.psi_layers; l >= 1; --l) {
    const Vector v = z - s.value(layer_name(prefix, l, "b")).col(0);
    if ((v.array().abs() >= 1.0).any()) return kDensityFloorLog;
    // d/dv atanh(v) = 1 / (1 - v^2)
    for (Index i = 0; i < v.size(); ++i) acc -= std::log1p(-v(i) * v(i));
    const Matrix& w = s.value(layer_name(prefix, l, "W"));
    acc -= log_abs_det(w);
    z = ridge_solve(w, v.array().atanh().matrix());
  }
  const Matrix& a = s.value(prefix + "/A");
  const Vector u =
      ridge_solve(a, z - s.value(prefix + "/B") * x_prev - s.value(prefix + "/Cy") * y);
  if ((u.array() < -kBoundsTol).any() || (u.array() > 1.0 + kBoundsTol).any())
    return kDensityFloorLog;
  acc -= log_abs_det(a);
  return acc;
}

// ---- factory -------------------------------------------------------------

std::unique_ptr<LearnedProposal> make_learned_proposal(Family family, const ssm::ModelSpec& model,
                                                       const ProposalHyper& hyper,
                                                       const ParamStore* store) {
  switch (family) {
    case Family::kMlp:
      return std::make_unique<MlpProposal>(model.n, model.m, hyper, store);
    case Family::kRnn:
      return std::make_unique<RnnProposal>(model.n, model.m, hyper, store);
    case Family::kGnn:
      return std::make_unique<GnnProposal>(model.n, model.m, hyper, store);
    case Family::kPsi:
      return std::make_unique<PsiProposal>(model.n, model.m, hyper, store);
  }
  throw ConfigError("unknown proposal family tag");
}

}  // namespace pfl::prop
