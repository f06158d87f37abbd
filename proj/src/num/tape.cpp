#include "pfl/num/tape.hpp"

#include <cmath>
#include <utility>

namespace pfl::num {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

}  // namespace

Var Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> pull) {
  Node n;
  n.value = std::move(value);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ContractError("tape: invalid node handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::leaf(Matrix value) {
  require_finite(value, "tape leaf");
  return push(std::move(value), nullptr);
}

Var Tape::leaf_ref(const Matrix& stable_storage) {
  require_finite(stable_storage, "tape leaf");
  Node n;
  n.ref = &stable_storage;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Matrix& Tape::val(Var v) const {
  const Node& n = node(v);
  return n.ref ? *n.ref : n.value;
}

Matrix Tape::adjoint(Var v) const {
  const Node& n = node(v);
  if (n.adj.size() == 0) return Matrix::Zero(val(v).rows(), val(v).cols());
  return n.adj;
}

void Tape::accumulate(Var v, const Matrix& contribution) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.adj.size() == 0)
    n.adj = contribution;
  else
    n.adj += contribution;
}

void Tape::clear() {
  nodes_.clear();
  floor_hits_ = 0;
}

void Tape::backward(Var loss) {
  const Matrix& lv = val(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("backward: loss node is not scalar");
  accumulate(loss, Matrix::Ones(1, 1));
  for (std::int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.adj.size() == 0 || !n.pull) continue;
    n.pull(*this, n.adj);
  }
}

Matrix gradient(const Tape& tape, Var v) { return tape.adjoint(v); }

// --- arithmetic ---------------------------------------------------------

Var Tape::add(Var a, Var b) {
  check_same_shape(val(a), val(b), "add");
  return push(val(a) + val(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(val(a), val(b), "sub");
  return push(val(a) - val(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var Tape::matmul(Var a, Var b) {
  if (val(a).cols() != val(b).rows())
    throw DimensionError("matmul: inner dimensions " + std::to_string(val(a).cols()) + " vs " +
                         std::to_string(val(b).rows()));
  return push(val(a) * val(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * t.val(b).transpose());
    t.accumulate(b, t.val(a).transpose() * g);
  });
}

Var Tape::hadamard(Var a, Var b) {
  check_same_shape(val(a), val(b), "hadamard");
  return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.val(b)));
    t.accumulate(b, g.cwiseProduct(t.val(a)));
  });
}

Var Tape::scale(Var a, double s) {
  return push(val(a) * s, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var Tape::affine(Var a, double alpha, double beta) {
  return push((val(a).array() * alpha + beta).matrix(),
              [a, alpha](Tape& t, const Matrix& g) { t.accumulate(a, g * alpha); });
}

Var Tape::add_diag(Var a, double s) {
  if (val(a).rows() != val(a).cols()) throw DimensionError("add_diag: matrix not square");
  Matrix v = val(a);
  v.diagonal().array() += s;
  return push(std::move(v), [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var Tape::transpose(Var a) {
  return push(val(a).transpose(),
              [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var Tape::sum(Var a) {
  return push(Matrix::Constant(1, 1, val(a).sum()), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(t.val(a).rows(), t.val(a).cols(), g(0, 0)));
  });
}

// --- elementwise nonlinearities ------------------------------------------

Var Tape::tanh(Var a) {
  Matrix v = val(a).array().tanh().matrix();
  Var out = push(std::move(v), nullptr);
  nodes_.back().pull = [a, out](Tape& t, const Matrix& g) {
    const Matrix& y = t.val(out);
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  };
  return out;
}

Var Tape::sigmoid(Var a) {
  Matrix v = (1.0 / (1.0 + (-val(a).array()).exp())).matrix();
  Var out = push(std::move(v), nullptr);
  nodes_.back().pull = [a, out](Tape& t, const Matrix& g) {
    const auto y = t.val(out).array();
    t.accumulate(a, (g.array() * y * (1.0 - y)).matrix());
  };
  return out;
}

Var Tape::abs(Var a) {
  return push(val(a).cwiseAbs(), [a](Tape& t, const Matrix& g) {
    const Matrix sgn = t.val(a).unaryExpr(
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    t.accumulate(a, g.cwiseProduct(sgn));
  });
}

// --- broadcast / layout ----------------------------------------------------

Var Tape::add_col_broadcast(Var a, Var colv) {
  if (val(colv).cols() != 1 || val(colv).rows() != val(a).rows())
    throw DimensionError("add_col_broadcast: bias must be rows(a) x 1");
  return push(val(a).colwise() + val(colv).col(0), [a, colv](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(colv, g.rowwise().sum());
  });
}

Var Tape::add_row_broadcast(Var a, Var colv) {
  if (val(colv).cols() != 1 || val(colv).rows() != val(a).cols())
    throw DimensionError("add_row_broadcast: bias must be cols(a) x 1");
  return push(val(a).rowwise() + val(colv).col(0).transpose(),
              [a, colv](Tape& t, const Matrix& g) {
                t.accumulate(a, g);
                t.accumulate(colv, g.colwise().sum().transpose());
              });
}

Var Tape::slice_rows(Var a, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > val(a).rows())
    throw DimensionError("slice_rows: out of range");
  return push(val(a).middleRows(first, count), [a, first, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.val(a).rows(), t.val(a).cols());
    full.middleRows(first, count) = g;
    t.accumulate(a, full);
  });
}

Var Tape::slice_cols(Var a, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > val(a).cols())
    throw DimensionError("slice_cols: out of range");
  return push(val(a).middleCols(first, count), [a, first, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.val(a).rows(), t.val(a).cols());
    full.middleCols(first, count) = g;
    t.accumulate(a, full);
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: empty");
  Index rows = 0;
  const Index cols = val(parts[0]).cols();
  for (Var p : parts) {
    if (val(p).cols() != cols) throw DimensionError("concat_rows: column mismatch");
    rows += val(p).rows();
  }
  Matrix v(rows, cols);
  Index at = 0;
  for (Var p : parts) {
    v.middleRows(at, val(p).rows()) = val(p);
    at += val(p).rows();
  }
  return push(std::move(v), [parts](Tape& t, const Matrix& g) {
    Index at = 0;
    for (Var p : parts) {
      const Index r = t.val(p).rows();
      t.accumulate(p, g.middleRows(at, r));
      at += r;
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: empty");
  Index cols = 0;
  const Index rows = val(parts[0]).rows();
  for (Var p : parts) {
    if (val(p).rows() != rows) throw DimensionError("concat_cols: row mismatch");
    cols += val(p).cols();
  }
  Matrix v(rows, cols);
  Index at = 0;
  for (Var p : parts) {
    v.middleCols(at, val(p).cols()) = val(p);
    at += val(p).cols();
  }
  return push(std::move(v), [parts](Tape& t, const Matrix& g) {
    Index at = 0;
    for (Var p : parts) {
      const Index c = t.val(p).cols();
      t.accumulate(p, g.middleCols(at, c));
      at += c;
    }
  });
}

Var Tape::select_cols(Var a, const std::vector<Index>& idx) {
  const Matrix& src = val(a);
  Matrix v(src.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= src.cols()) throw DimensionError("select_cols: index out of range");
    v.col(static_cast<Index>(j)) = src.col(idx[j]);
  }
  return push(std::move(v), [a, idx](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.val(a).rows(), t.val(a).cols());
    for (std::size_t j = 0; j < idx.size(); ++j) full.col(idx[j]) += g.col(static_cast<Index>(j));
    t.accumulate(a, full);
  });
}

// --- structured ops ---------------------------------------------------------

Var Tape::kernel_gauss(Var z) {
  if (val(z).cols() != 1) throw DimensionError("kernel_gauss: expects a column vector");
  const Index n = val(z).rows();
  Matrix k(n, n);
  const auto& zv = val(z);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = zv(i, 0) - zv(j, 0);
      k(i, j) = std::exp(-d * d);
    }
  Var out = push(std::move(k), nullptr);
  nodes_.back().pull = [z, out](Tape& t, const Matrix& g) {
    const auto& zv = t.val(z);
    const auto& kv = t.val(out);
    const Index n = zv.rows();
    Matrix gz = Matrix::Zero(n, 1);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double d = zv(i, 0) - zv(j, 0);
        const double w = -2.0 * d * kv(i, j);
        gz(i, 0) += g(i, j) * w;
        gz(j, 0) -= g(i, j) * w;
      }
    t.accumulate(z, gz);
  };
  return out;
}

Var Tape::cholesky(Var a, double jitter) {
  Matrix shifted = val(a);
  if (shifted.rows() != shifted.cols()) throw DimensionError("cholesky: matrix not square");
  shifted.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw NumericalError("tape cholesky: factorization failed at the requested jitter");
  Matrix l = llt.matrixL();
  Var out = push(std::move(l), nullptr);
  nodes_.back().pull = [a, out](Tape& t, const Matrix& g) {
    // Reverse-mode rule for A = L L^T treating A as symmetric input.
    const Matrix& l = t.val(out);
    const Matrix ltg = l.transpose() * g;
    Matrix p = ltg.triangularView<Eigen::Lower>();
    p.diagonal() *= 0.5;
    const Matrix tmp = l.transpose().triangularView<Eigen::Upper>().solve(p);
    const Matrix s =
        l.transpose().triangularView<Eigen::Upper>().solve(tmp.transpose()).transpose();
    t.accumulate(a, 0.5 * (s + s.transpose()));
  };
  return out;
}

// --- log-density blocks -------------------------------------------------------

Var Tape::loglik_gauss_iso(Var resid, double sigma2) {
  if (sigma2 <= 0.0) throw ContractError("loglik_gauss_iso: sigma2 must be positive");
  const Matrix& r = val(resid);
  const double n = static_cast<double>(r.size());
  const double v = -0.5 * n * std::log(2.0 * M_PI * sigma2) - 0.5 * r.squaredNorm() / sigma2;
  return push(Matrix::Constant(1, 1, v), [resid, sigma2](Tape& t, const Matrix& g) {
    t.accumulate(resid, (-g(0, 0) / sigma2) * t.val(resid));
  });
}

Var Tape::loglik_shifted_exp(Var resid, double sigma, double floor_log) {
  if (sigma <= 0.0) throw ContractError("loglik_shifted_exp: sigma must be positive");
  const Matrix& r = val(resid);
  double v = 0.0;
  std::int64_t hits = 0;
  for (Index j = 0; j < r.cols(); ++j)
    for (Index i = 0; i < r.rows(); ++i) {
      if (r(i, j) >= -sigma) {
        v += -std::log(sigma) - (r(i, j) + sigma) / sigma;
      } else {
        v += floor_log;
        ++hits;
      }
    }
  floor_hits_ += hits;
  return push(Matrix::Constant(1, 1, v), [resid, sigma](Tape& t, const Matrix& g) {
    const Matrix& r = t.val(resid);
    Matrix gr(r.rows(), r.cols());
    for (Index j = 0; j < r.cols(); ++j)
      for (Index i = 0; i < r.rows(); ++i)
        gr(i, j) = r(i, j) >= -sigma ? -g(0, 0) / sigma : 0.0;
    t.accumulate(resid, gr);
  });
}

Var Tape::loglik_centered_uniform(Var resid, double sigma, double floor_log) {
  if (sigma <= 0.0) throw ContractError("loglik_centered_uniform: sigma must be positive");
  const double half_width = sigma * std::sqrt(3.0);
  const Matrix& r = val(resid);
  double v = 0.0;
  std::int64_t hits = 0;
  for (Index j = 0; j < r.cols(); ++j)
    for (Index i = 0; i < r.rows(); ++i) {
      if (std::abs(r(i, j)) <= half_width) {
        v += -std::log(2.0 * half_width);
      } else {
        v += floor_log;
        ++hits;
      }
    }
  floor_hits_ += hits;
  // Piecewise constant in the residual: zero gradient everywhere.
  return push(Matrix::Constant(1, 1, v), [resid](Tape& t, const Matrix& g) {
    (void)g;
    t.accumulate(resid, Matrix::Zero(t.val(resid).rows(), t.val(resid).cols()));
  });
}

}  // namespace pfl::num
