#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pfl/num/linalg.hpp"
#include "pfl/prop/arch.hpp"
#include "pfl/prop/learned.hpp"
#include "pfl/ssm/scenario.hpp"

using namespace pfl;
using namespace pfl::prop;

namespace {

ProposalHyper tiny_hyper() {
  ProposalHyper h;
  h.mlp_hidden = {3, 4};
  h.lstm_hidden = 3;
  h.gnn_features = {3, 4};
  h.gnn_order = 2;
  h.psi_layers = 2;
  return h;
}

ssm::ModelSpec tiny_model(num::Rng& rng, Index n = 4) {
  return ssm::make_scenario_model(ssm::Scenario::kLinearGaussian, n, 5.0, rng);
}

void zero_all(ParamStore& store) {
  for (const auto& name : store.names()) store.mutable_value(name).setZero();
}

}  // namespace

TEST_CASE("kernel_covariance: constant embedding and pinned kernel") {
  const Matrix ones = kernel_covariance(Vector::Zero(3), Matrix::Identity(3, 3));
  CHECK((ones.array() == 1.0).all());

  Vector z(2);
  z << 0.0, 1.0;
  const Matrix k = kernel_covariance(z, Matrix::Identity(2, 2));
  CHECK(k(0, 0) == doctest::Approx(1.0));
  CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)));

  num::Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.next_u64() % 8);
    const Matrix sigma =
        kernel_covariance(rng.normal_matrix(n, 1).col(0), rng.normal_matrix(n, n));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("gaussian head: degenerate covariance samples at the mean") {
  num::Rng rng(9);
  const Vector mu = rng.normal_matrix(3, 1).col(0);
  const GaussianProposalParams p = make_gaussian_params(mu, Matrix::Zero(3, 3));
  CHECK(p.jitter > 0.0);
  for (int i = 0; i < 50; ++i) {
    auto [x, lp] = gaussian_sample(p, rng);
    CHECK((x - mu).cwiseAbs().maxCoeff() <= 4.0 * std::sqrt(p.jitter));
    CHECK(std::isfinite(lp));
  }
}

TEST_CASE("gaussian head: log density at the mean, N=2, identity covariance") {
  const GaussianProposalParams p =
      make_gaussian_params(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(gaussian_head_logpdf(p, Vector::Zero(2)) == doctest::Approx(-1.83788).epsilon(1e-5));
}

TEST_CASE("gaussian head: empirical covariance of draws matches Sigma") {
  num::Rng rng(31);
  const Matrix raw = rng.normal_matrix(3, 3);
  const Matrix sigma = raw * raw.transpose() + Matrix::Identity(3, 3);
  const GaussianProposalParams p = make_gaussian_params(Vector::Zero(3), sigma);
  const int draws = 1000000;
  Matrix acc = Matrix::Zero(3, 3);
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < draws; ++i) {
    auto [x, lp] = gaussian_sample(p, rng);
    acc += x * x.transpose();
    mean += x;
  }
  mean /= draws;
  const Matrix cov = acc / draws - mean * mean.transpose();
  CHECK((cov - sigma).norm() / sigma.norm() <= 0.02);
}

TEST_CASE("gaussian head: self-sample entropy matches the closed form") {
  num::Rng rng(12);
  const Matrix raw = rng.normal_matrix(3, 3);
  const Matrix sigma = raw * raw.transpose() + 0.5 * Matrix::Identity(3, 3);
  const GaussianProposalParams p = make_gaussian_params(rng.normal_matrix(3, 1).col(0), sigma);

  Matrix shifted = p.sigma;
  shifted.diagonal().array() += p.jitter;
  const double entropy =
      0.5 * std::log((2.0 * M_PI * std::exp(1.0) * shifted).determinant());

  const int draws = 100000;
  std::vector<double> neglog(draws);
  for (int i = 0; i < draws; ++i) {
    auto [x, lp] = gaussian_sample(p, rng);
    neglog[static_cast<std::size_t>(i)] = -lp;
  }
  const double est = oracle::mean(neglog);
  const double se = std::sqrt(oracle::variance(neglog) / draws);
  CHECK(std::abs(est - entropy) <= 3.0 * se);
}

TEST_CASE("mlp proposal: zero parameters, determinism, store errors") {
  num::Rng rng(7);
  const ssm::ModelSpec model = tiny_model(rng);
  MlpProposal prop(model.n, model.m, tiny_hyper(), nullptr);

  ParamStore store;
  num::Rng init_rng(1);
  prop.init_params(store, 3, init_rng);
  zero_all(store);
  MlpProposal attached(model.n, model.m, tiny_hyper(), &store);

  const Matrix x_prev = rng.normal_matrix(model.n, 5);
  const Vector y = rng.normal_matrix(model.m, 1).col(0);
  pf::BatchMemory mem;
  Matrix x1, x2;
  Vector lp1, lp2;
  num::Rng r1(42), r2(42);
  attached.sample(model, 1, x_prev, y, mem, r1, x1, lp1);
  attached.sample(model, 1, x_prev, y, mem, r2, x2, lp2);
  CHECK((x1 - x2).cwiseAbs().maxCoeff() == 0.0);
  // Zero networks: mu = 0 and Sigma = 0, so draws collapse to the mean.
  CHECK(x1.cwiseAbs().maxCoeff() <= 1e-5);

  // Proposing at a time index with no parameters must fail loudly.
  num::Rng r3(4);
  CHECK_THROWS_AS(attached.sample(model, 9, x_prev, y, mem, r3, x1, lp1), StoreError);
}

TEST_CASE("mlp proposal: single-hidden-unit toy matches a hand-computed forward") {
  num::Rng rng(3);
  ProposalHyper h;
  h.mlp_hidden = {1};
  const ssm::ModelSpec model = tiny_model(rng);
  ParamStore store;
  MlpProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(11);
  prop.init_params(store, 1, init_rng);

  const Matrix x_prev = rng.normal_matrix(model.n, 1);
  const Vector y = rng.normal_matrix(model.m, 1).col(0);
  pf::BatchMemory mem;
  Matrix x;
  Vector lp;
  num::Rng draw(5);
  prop.sample(model, 1, x_prev, y, mem, draw, x, lp);

  Vector input(model.n + model.m);
  input << x_prev.col(0), y;
  const auto hand_head = [&](const std::string& prefix) {
    const Vector hidden =
        ((store.value(prefix + "/l0/W") * input + store.value(prefix + "/l0/b").col(0)).array())
            .tanh()
            .matrix();
    return Vector(store.value(prefix + "/l1/W") * hidden + store.value(prefix + "/l1/b").col(0));
  };
  const Vector mu = hand_head("mlp/mu/t1");
  const Vector zc = hand_head("mlp/sigma");
  const Matrix sigma = kernel_covariance(zc, store.value("mlp/sigma/C"));

  // Replay the draw: x = mu + L u with the same stream.
  const GaussianProposalParams p = make_gaussian_params(mu, sigma);
  num::Rng replay(5);
  const Vector u = replay.normal_matrix(model.n, 1).col(0);
  CHECK((x.col(0) - (p.mu + p.L * u)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(lp(0) == doctest::Approx(gaussian_head_logpdf(p, x.col(0))).epsilon(1e-10));
}

TEST_CASE("rnn proposal: zero parameters, time invariance, toy recursion") {
  num::Rng rng(13);
  const ssm::ModelSpec model = tiny_model(rng);
  ProposalHyper h = tiny_hyper();
  ParamStore store;
  RnnProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(2);
  prop.init_params(store, 5, init_rng);

  SUBCASE("zero parameters give a zero mean") {
    zero_all(store);
    pf::BatchMemory mem = prop.init_memory(3);
    const Matrix x_prev = rng.normal_matrix(model.n, 3);
    const Vector y = rng.normal_matrix(model.m, 1).col(0);
    Matrix x;
    Vector lp;
    num::Rng draw(8);
    prop.sample(model, 1, x_prev, y, mem, draw, x, lp);
    CHECK(x.cwiseAbs().maxCoeff() <= 1e-5);
  }

  SUBCASE("shared parameters: identical inputs and memory at different t agree") {
    const Matrix x_prev = rng.normal_matrix(model.n, 2);
    const Vector y = rng.normal_matrix(model.m, 1).col(0);
    Matrix xa, xb;
    Vector la, lb;
    pf::BatchMemory ma = prop.init_memory(2), mb = prop.init_memory(2);
    num::Rng ra(99), rb(99);
    prop.sample(model, 1, x_prev, y, ma, ra, xa, la);
    prop.sample(model, 4, x_prev, y, mb, rb, xb, lb);
    CHECK((xa - xb).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ma.h - mb.h).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("memory size mismatch rejected") {
    pf::BatchMemory bad;
    bad.h = Matrix::Zero(2, 3);
    bad.c = Matrix::Zero(2, 3);
    const Matrix x_prev = rng.normal_matrix(model.n, 3);
    const Vector y = rng.normal_matrix(model.m, 1).col(0);
    Matrix x;
    Vector lp;
    num::Rng draw(8);
    CHECK_THROWS_AS(prop.sample(model, 1, x_prev, y, bad, draw, x, lp), ContractError);
  }
}

TEST_CASE("rnn proposal: scalar hidden state matches the hand recursion") {
  num::Rng rng(17);
  ssm::ModelSpec model = tiny_model(rng);
  ProposalHyper h = tiny_hyper();
  h.lstm_hidden = 1;
  ParamStore store;
  RnnProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(23);
  prop.init_params(store, 1, init_rng);

  const Matrix x_prev = rng.normal_matrix(model.n, 1);
  const Vector y = rng.normal_matrix(model.m, 1).col(0);
  pf::BatchMemory mem = prop.init_memory(1);
  Matrix x;
  Vector lp;
  num::Rng draw(77);
  prop.sample(model, 1, x_prev, y, mem, draw, x, lp);

  // Hand recursion of the gates and heads.
  Vector input(model.n + model.m);
  input << x_prev.col(0), y;
  const Vector a = store.value("rnn/lstm/Wx") * input + store.value("rnn/lstm/b").col(0);
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double c_new = sig(a(1)) * 0.0 + sig(a(0)) * std::tanh(a(3));
  const double h_new = sig(a(2)) * std::tanh(c_new);
  CHECK(mem.c(0, 0) == doctest::Approx(c_new).epsilon(1e-12));
  CHECK(mem.h(0, 0) == doctest::Approx(h_new).epsilon(1e-12));

  const Vector mu =
      store.value("rnn/mu/W") * Vector::Constant(1, h_new) + store.value("rnn/mu/b").col(0);
  const Vector zc =
      store.value("rnn/sigma/W") * Vector::Constant(1, h_new) + store.value("rnn/sigma/b").col(0);
  const GaussianProposalParams p =
      make_gaussian_params(mu, kernel_covariance(zc, store.value("rnn/sigma/C")));
  num::Rng replay(77);
  const Vector u = replay.normal_matrix(model.n, 1).col(0);
  CHECK((x.col(0) - (p.mu + p.L * u)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gnn proposal: zero-order filters reduce to a per-node shared net") {
  num::Rng rng(19);
  const ssm::ModelSpec model = tiny_model(rng, 5);
  ProposalHyper h = tiny_hyper();
  h.gnn_order = 0;
  ParamStore store;
  GnnProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(3);
  prop.init_params(store, 1, init_rng);

  const Matrix x_prev = rng.normal_matrix(model.n, 1);
  const Vector y = rng.normal_matrix(model.m, 1).col(0);
  pf::BatchMemory mem;
  Matrix x;
  Vector lp;
  num::Rng draw(50);
  prop.sample(model, 1, x_prev, y, mem, draw, x, lp);

  // Per-node evaluation with the same (shared) coefficients.
  const Vector ymu = store.value("gnn/mu/t1/Ay") * y;
  Matrix z(model.n, 2);
  z << x_prev.col(0), ymu;
  for (int l = 0; l < 3; ++l) {
    const std::string block = "gnn/mu/t1/l" + std::to_string(l);
    z = z * store.value(block + "/d0/W");
    z.rowwise() += store.value(block + "/b").col(0).transpose();
    if (l < 2) z = z.array().tanh().matrix();
  }
  const Vector mu_ref = z.col(0);

  // Re-derive the mean by replaying the draw.
  const Vector ysig = store.value("gnn/sigma/Ay") * y;
  Matrix zs(model.n, 2);
  zs << x_prev.col(0), ysig;
  for (int l = 0; l < 3; ++l) {
    const std::string block = "gnn/sigma/l" + std::to_string(l);
    zs = zs * store.value(block + "/d0/W");
    zs.rowwise() += store.value(block + "/b").col(0).transpose();
    if (l < 2) zs = zs.array().tanh().matrix();
  }
  const GaussianProposalParams p =
      make_gaussian_params(mu_ref, kernel_covariance(zs.col(0), store.value("gnn/sigma/C")));
  num::Rng replay(50);
  const Vector u = replay.normal_matrix(model.n, 1).col(0);
  CHECK((x.col(0) - (p.mu + p.L * u)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gnn proposal: zero filter coefficients leave only the biases") {
  num::Rng rng(29);
  const ssm::ModelSpec model = tiny_model(rng, 5);
  ProposalHyper h = tiny_hyper();
  ParamStore store;
  GnnProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(4);
  prop.init_params(store, 1, init_rng);
  for (const auto& name : store.names())
    if (name.find("/W") != std::string::npos && name.rfind("gnn/mu", 0) == 0)
      store.mutable_value(name).setZero();

  const Matrix x_prev = rng.normal_matrix(model.n, 1);
  const Vector y = rng.normal_matrix(model.m, 1).col(0);
  pf::BatchMemory mem;
  Matrix x;
  Vector lp;
  num::Rng draw(51);
  prop.sample(model, 1, x_prev, y, mem, draw, x, lp);

  // Mean must equal the last bias broadcast over all nodes: b * 1_N.
  const double bias = store.value("gnn/mu/t1/l2/b")(0, 0);
  const Vector ysig = store.value("gnn/sigma/Ay") * y;
  Matrix zs(model.n, 2);
  zs << x_prev.col(0), ysig;
  for (int l = 0; l < 3; ++l) {
    std::vector<Matrix> coeffs;
    const std::string block = "gnn/sigma/l" + std::to_string(l);
    for (int d = 0; d <= h.gnn_order; ++d)
      coeffs.push_back(store.value(block + "/d" + std::to_string(d) + "/W"));
    zs = num::graph_filter(model.a, zs, coeffs);
    zs.rowwise() += store.value(block + "/b").col(0).transpose();
    if (l < 2) zs = zs.array().tanh().matrix();
  }
  const GaussianProposalParams p = make_gaussian_params(
      Vector::Constant(model.n, bias), kernel_covariance(zs.col(0), store.value("gnn/sigma/C")));
  num::Rng replay(51);
  const Vector u = replay.normal_matrix(model.n, 1).col(0);
  CHECK((x.col(0) - (p.mu + p.L * u)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gnn proposal: permutation equivariance of the mean path") {
  num::Rng rng(37);
  const Index n = 5;
  const ssm::ModelSpec model = tiny_model(rng, n);
  ProposalHyper h = tiny_hyper();

  for (int trial = 0; trial < 5; ++trial) {
    ParamStore store;
    GnnProposal prop(model.n, model.m, h, &store);
    num::Rng init_rng(100 + static_cast<std::uint64_t>(trial));
    prop.init_params(store, 1, init_rng);
    // Make draws deterministic at the mean: zero covariance path.
    store.mutable_value("gnn/sigma/C").setZero();

    // Random permutation.
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(i + 1))]);
    Matrix p = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;

    const Matrix x_prev = rng.normal_matrix(n, 1);
    const Vector y = rng.normal_matrix(model.m, 1).col(0);
    pf::BatchMemory mem;
    Matrix x_base;
    Vector lp;
    num::Rng draw(9);
    prop.sample(model, 1, x_prev, y, mem, draw, x_base, lp);

    // Permuted system: S' = P S P^T, x' = P x, A_y' = P A_y (both heads).
    ParamStore store_p;
    GnnProposal prop_p(model.n, model.m, h, &store_p);
    num::Rng init_rng2(100 + static_cast<std::uint64_t>(trial));
    prop_p.init_params(store_p, 1, init_rng2);
    store_p.mutable_value("gnn/sigma/C").setZero();
    store_p.mutable_value("gnn/mu/t1/Ay") = p * store.value("gnn/mu/t1/Ay");
    store_p.mutable_value("gnn/sigma/Ay") = p * store.value("gnn/sigma/Ay");
    ssm::ModelSpec permuted = model;
    permuted.a = p * model.a * p.transpose();

    Matrix x_perm;
    num::Rng draw2(9);
    prop_p.sample(permuted, 1, p * x_prev, y, mem, draw2, x_perm, lp);
    // Draws sit at the mean up to jitter-level noise (~1e-6), which does not
    // permute; a broken equivariance would show up at O(1).
    CHECK((x_perm.col(0) - p * x_base.col(0)).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("psi proposal: zero parameters collapse the transform; draws deterministic") {
  num::Rng rng(41);
  const ssm::ModelSpec model = tiny_model(rng);
  ProposalHyper h = tiny_hyper();
  ParamStore store;
  PsiProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(6);
  prop.init_params(store, 2, init_rng);

  SUBCASE("zero matrices and offsets map everything to zero") {
    // Forward map only: a zero transform is not invertible, so it has no
    // density; the collapse is checked on the transform itself.
    ParamStore zeroed;
    PsiProposal zp(model.n, model.m, h, &zeroed);
    num::Rng ir(6);
    zp.init_params(zeroed, 1, ir);
    zero_all(zeroed);
    PlainEngine e(zeroed);
    const Matrix u = rng.uniform_matrix(model.n, 4);
    const Matrix x_prev = rng.normal_matrix(model.n, 4);
    const Matrix yrep = rng.normal_matrix(model.m, 4);
    PlainEngine::V x = psi_transform(e, "psi/t1", &u, &x_prev, &yrep, h.psi_layers);
    CHECK(e.value(x).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("fixed stream, fixed inputs: deterministic draws") {
    const Matrix x_prev = rng.normal_matrix(model.n, 4);
    const Vector y = rng.normal_matrix(model.m, 1).col(0);
    pf::BatchMemory mem;
    Vector lp;
    num::Rng draw_a(123), draw_b(123);
    Matrix xa, xb;
    prop.sample(model, 1, x_prev, y, mem, draw_a, xa, lp);
    prop.sample(model, 1, x_prev, y, mem, draw_b, xb, lp);
    CHECK((xa - xb).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("psi proposal: scalar tanh map, image and density oracle") {
  // Single layer, unit weights: x = tanh(u) with u ~ U[0,1), so the density
  // at x inside (0, tanh 1) is 1/(1-x^2).
  ssm::ModelSpec model;
  model.n = 1;
  model.m = 1;
  model.a = Matrix::Identity(1, 1);
  model.c = Matrix::Identity(1, 1);
  model.initial.mean = Vector::Zero(1);
  model.validate();

  ProposalHyper h;
  h.psi_layers = 1;
  ParamStore store;
  PsiProposal prop(1, 1, h, &store);
  num::Rng init_rng(2);
  prop.init_params(store, 1, init_rng);
  store.mutable_value("psi/t1/A").setIdentity();
  store.mutable_value("psi/t1/B").setZero();
  store.mutable_value("psi/t1/Cy").setZero();
  store.mutable_value("psi/t1/l1/W").setIdentity();
  store.mutable_value("psi/t1/l1/b").setZero();

  const Vector x_prev = Vector::Zero(1);
  const Vector y = Vector::Zero(1);
  num::Rng draw(7);
  pf::BatchMemory mem;
  Matrix x;
  Vector lp;
  prop.sample(model, 1, Matrix::Zero(1, 64), y, mem, draw, x, lp);
  for (Index j = 0; j < 64; ++j) {
    CHECK(x(0, j) >= 0.0);
    CHECK(x(0, j) < std::tanh(1.0));
    const double expect = -std::log1p(-x(0, j) * x(0, j));
    CHECK(lp(j) == doctest::Approx(expect).epsilon(1e-6));
  }

  // Outside the image: the density floor.
  CHECK(prop.logpdf(1, x_prev, y, Vector::Constant(1, 0.9)) ==
        doctest::Approx(kDensityFloorLog));
  CHECK(prop.logpdf(1, x_prev, y, Vector::Constant(1, -0.2)) ==
        doctest::Approx(kDensityFloorLog));
}

TEST_CASE("psi proposal: density integrates to one on a scalar grid") {
  num::Rng rng(53);
  ssm::ModelSpec model;
  model.n = 1;
  model.m = 1;
  model.a = Matrix::Identity(1, 1);
  model.c = Matrix::Identity(1, 1);
  model.initial.mean = Vector::Zero(1);
  model.validate();

  ProposalHyper h;
  h.psi_layers = 2;
  for (int trial = 0; trial < 3; ++trial) {
    ParamStore store;
    PsiProposal prop(1, 1, h, &store);
    num::Rng init_rng(200 + static_cast<std::uint64_t>(trial));
    prop.init_params(store, 1, init_rng);

    const Vector x_prev = Vector::Constant(1, rng.normal());
    const Vector y = Vector::Constant(1, rng.normal());
    const double center = store.value("psi/t1/l2/b")(0, 0);
    const int grid = 400001;
    const double lo = center - 1.0, hi = center + 1.0;
    const double step = (hi - lo) / grid;
    double mass = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double xv = lo + (i + 0.5) * step;
      mass += std::exp(prop.logpdf(1, x_prev, y, Vector::Constant(1, xv))) * step;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-2));
  }
}

TEST_CASE("reparametrized gradients match finite differences with frozen noise") {
  num::Rng rng(61);
  const ssm::ModelSpec model = tiny_model(rng);
  ProposalHyper h = tiny_hyper();
  ParamStore store;
  MlpProposal prop(model.n, model.m, h, &store);
  num::Rng init_rng(8);
  prop.init_params(store, 1, init_rng);

  const Matrix x_prev = rng.normal_matrix(model.n, 2);
  const Vector y = rng.normal_matrix(model.m, 1).col(0);
  const Matrix weights = rng.normal_matrix(model.n, 2);

  const auto eval = [&]() {
    num::Tape tape;
    ParamBinding bind(tape, store);
    TapeEngine e(tape, bind);
    TrainMemory mem;
    num::Rng draw(99);  // frozen noise across evaluations
    num::Var x = prop.sample_reparam(e, model, 1, e.constant(x_prev), y, mem, draw, nullptr);
    num::Var loss = tape.sum(tape.hadamard(x, tape.constant(weights)));
    return std::pair<num::Tape&&, num::Var>(std::move(tape), loss);
  };

  for (const std::string name : {"mlp/sigma/C", "mlp/mu/t1/l0/W", "mlp/sigma/l1/b"}) {
    num::Tape tape;
    ParamBinding bind(tape, store);
    TapeEngine e(tape, bind);
    TrainMemory mem;
    num::Rng draw(99);
    num::Var x = prop.sample_reparam(e, model, 1, e.constant(x_prev), y, mem, draw, nullptr);
    num::Var loss = tape.sum(tape.hadamard(x, tape.constant(weights)));
    tape.backward(loss);
    bind.harvest(store);
    const Matrix analytic = store.grad(name);

    Matrix& param = store.mutable_value(name);
    const Matrix saved = param;
    Eigen::Map<const Vector> flat(saved.data(), saved.size());
    auto f = [&](const Vector& v) {
      param = saved;
      Eigen::Map<Vector>(param.data(), param.size()) = v;
      num::Tape t2;
      ParamBinding b2(t2, store);
      TapeEngine e2(t2, b2);
      TrainMemory m2;
      num::Rng d2(99);
      num::Var x2 = prop.sample_reparam(e2, model, 1, e2.constant(x_prev), y, m2, d2, nullptr);
      const double out = (t2.val(x2).cwiseProduct(weights)).sum();
      param = saved;
      return out;
    };
    const Vector fd = oracle::fd_gradient(f, flat);
    Eigen::Map<const Vector> an(analytic.data(), analytic.size());
    CHECK(oracle::grad_rel_err(an, fd) <= 1e-4);
  }
}

TEST_CASE("plain and reparametrized paths produce identical forward values") {
  num::Rng rng(67);
  const ssm::ModelSpec model = tiny_model(rng);
  ProposalHyper h = tiny_hyper();

  for (Family family : {Family::kMlp, Family::kRnn, Family::kGnn, Family::kPsi}) {
    ParamStore store;
    auto prop = make_learned_proposal(family, model, h, &store);
    num::Rng init_rng(10 + static_cast<std::uint64_t>(family));
    prop->init_params(store, 2, init_rng);

    const Matrix x_prev = rng.normal_matrix(model.n, 3);
    const Vector y = rng.normal_matrix(model.m, 1).col(0);

    pf::BatchMemory mem = prop->init_memory(3);
    Matrix x_plain;
    Vector lp_plain;
    num::Rng d1(404);
    prop->sample(model, 1, x_prev, y, mem, d1, x_plain, lp_plain);

    num::Tape tape;
    ParamBinding bind(tape, store);
    TapeEngine e(tape, bind);
    TrainMemory tmem = prop->init_train_memory(e, 3);
    Vector lp_tape;
    num::Rng d2(404);
    num::Var x_var = prop->sample_reparam(e, model, 1, e.constant(x_prev), y, tmem, d2, &lp_tape);
    CHECK((tape.val(x_var) - x_plain).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((lp_tape - lp_plain).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  num::Rng rng(71);
  ParamStore store;
  store.create("a/W", rng.normal_matrix(4, 3));
  store.create("a/b", rng.normal_matrix(4, 1));
  store.create("z/deep/name/t12/W", rng.normal_matrix(2, 7));

  std::stringstream buffer;
  store.save(buffer);
  const ParamStore loaded = ParamStore::load(buffer);
  CHECK(loaded.size() == store.size());
  CHECK(loaded.checksum() == store.checksum());
  for (const auto& name : store.names())
    CHECK((loaded.value(name).array() == store.value(name).array()).all());

  std::stringstream again;
  loaded.save(again);
  CHECK(again.str() == buffer.str());
}

TEST_CASE("param store: duplicate and missing names") {
  ParamStore store;
  store.create("w", Matrix::Zero(2, 2));
  CHECK_THROWS_AS(store.create("w", Matrix::Zero(2, 2)), StoreError);
  CHECK_THROWS_AS(store.value("nope"), StoreError);
  CHECK(store.has("w"));
}
