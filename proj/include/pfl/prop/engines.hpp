#ifndef PFL_PROP_ENGINES_HPP
#define PFL_PROP_ENGINES_HPP

#include <deque>
#include <unordered_map>

#include "pfl/num/nn.hpp"
#include "pfl/num/tape.hpp"
#include "pfl/prop/param_store.hpp"

namespace pfl::prop {

// The architecture forwards below are written once against this implicit
// engine interface and run either directly on matrices (filtering) or on the
// tape (training). Values are handles; `value()` exposes the matrix behind a
// handle in both engines, which keeps jitter selection and the detached
// weight bookkeeping identical across paths.

// Direct evaluation. Intermediates live in an arena owned by the engine, so
// parameter tensors are never copied.
class PlainEngine {
 public:
  using V = const Matrix*;

  explicit PlainEngine(const ParamStore& store) : store_(&store) {}

  V param(const std::string& name) { return &store_->value(name); }
  V constant(Matrix m) { return hold(std::move(m)); }
  const Matrix& value(V v) const { return *v; }

  V add(V a, V b) { return hold(*a + *b); }
  V sub(V a, V b) { return hold(*a - *b); }
  V matmul(V a, V b) {
    if (a->cols() != b->rows()) throw DimensionError("matmul: inner dimension mismatch");
    return hold(*a * *b);
  }
  V hadamard(V a, V b) { return hold(a->cwiseProduct(*b)); }
  V scale(V a, double s) { return hold(*a * s); }
  V tanh(V a) { return hold(a->array().tanh().matrix()); }
  V sigmoid(V a) { return hold((1.0 / (1.0 + (-a->array()).exp())).matrix()); }
  V transpose(V a) { return hold(a->transpose()); }
  V add_col_broadcast(V a, V col) { return hold(a->colwise() + col->col(0)); }
  V add_row_broadcast(V a, V col) { return hold(a->rowwise() + col->col(0).transpose()); }
  V slice_rows(V a, Index first, Index count) { return hold(a->middleRows(first, count)); }
  V slice_cols(V a, Index first, Index count) { return hold(a->middleCols(first, count)); }
  V col(V a, Index j) { return slice_cols(a, j, 1); }
  V concat_rows(const std::vector<V>& parts) {
    Index rows = 0;
    for (V p : parts) rows += p->rows();
    Matrix m(rows, parts.front()->cols());
    Index at = 0;
    for (V p : parts) {
      m.middleRows(at, p->rows()) = *p;
      at += p->rows();
    }
    return hold(std::move(m));
  }
  V concat_cols(const std::vector<V>& parts) {
    Index cols = 0;
    for (V p : parts) cols += p->cols();
    Matrix m(parts.front()->rows(), cols);
    Index at = 0;
    for (V p : parts) {
      m.middleCols(at, p->cols()) = *p;
      at += p->cols();
    }
    return hold(std::move(m));
  }
  V kernel_gauss(V z) { return hold(num::kernel_gauss(z->col(0))); }
  V cholesky(V a, double jitter) {
    Matrix shifted = *a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success)
      throw NumericalError("plain cholesky: factorization failed at requested jitter");
    return hold(Matrix(llt.matrixL()));
  }
  V add_diag(V a, double s) {
    Matrix m = *a;
    m.diagonal().array() += s;
    return hold(std::move(m));
  }

 private:
  V hold(Matrix m) {
    arena_.push_back(std::move(m));
    return &arena_.back();
  }
  const ParamStore* store_;
  std::deque<Matrix> arena_;
};

// Memoized parameter leaves for one tape pass.
class ParamBinding {
 public:
  ParamBinding(num::Tape& tape, const ParamStore& store) : tape_(&tape), store_(&store) {}

  num::Var operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const num::Var v = tape_->leaf_ref(store_->value(name));
    bound_.emplace(name, v);
    return v;
  }

  // Move adjoints of bound parameters into the store's gradients; parameters
  // never touched by the pass get zeros.
  void harvest(ParamStore& store) const {
    store.clear_grads();
    for (const std::string& name : store.names()) {
      auto it = bound_.find(name);
      if (it != bound_.end())
        store.set_grad(name, tape_->adjoint(it->second));
      else
        store.set_grad(name, Matrix::Zero(store.value(name).rows(), store.value(name).cols()));
    }
  }

 private:
  num::Tape* tape_;
  const ParamStore* store_;
  std::unordered_map<std::string, num::Var> bound_;
};

// Tape-backed evaluation for reparametrized training passes.
class TapeEngine {
 public:
  using V = num::Var;

  TapeEngine(num::Tape& tape, ParamBinding& bind) : tape_(&tape), bind_(&bind) {}

  V param(const std::string& name) { return (*bind_)(name); }
  V constant(Matrix m) { return tape_->constant(std::move(m)); }
  const Matrix& value(V v) const { return tape_->val(v); }

  V add(V a, V b) { return tape_->add(a, b); }
  V sub(V a, V b) { return tape_->sub(a, b); }
  V matmul(V a, V b) { return tape_->matmul(a, b); }
  V hadamard(V a, V b) { return tape_->hadamard(a, b); }
  V scale(V a, double s) { return tape_->scale(a, s); }
  V tanh(V a) { return tape_->tanh(a); }
  V sigmoid(V a) { return tape_->sigmoid(a); }
  V transpose(V a) { return tape_->transpose(a); }
  V add_col_broadcast(V a, V col) { return tape_->add_col_broadcast(a, col); }
  V add_row_broadcast(V a, V col) { return tape_->add_row_broadcast(a, col); }
  V slice_rows(V a, Index first, Index count) { return tape_->slice_rows(a, first, count); }
  V slice_cols(V a, Index first, Index count) { return tape_->slice_cols(a, first, count); }
  V col(V a, Index j) { return tape_->col(a, j); }
  V concat_rows(const std::vector<V>& parts) { return tape_->concat_rows(parts); }
  V concat_cols(const std::vector<V>& parts) { return tape_->concat_cols(parts); }
  V kernel_gauss(V z) { return tape_->kernel_gauss(z); }
  V cholesky(V a, double jitter) { return tape_->cholesky(a, jitter); }
  V add_diag(V a, double s) { return tape_->add_diag(a, s); }

  num::Tape& tape() { return *tape_; }

 private:
  num::Tape* tape_;
  ParamBinding* bind_;
};

}  // namespace pfl::prop

#endif  // PFL_PROP_ENGINES_HPP
