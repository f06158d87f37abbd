#ifndef PFL_NUM_TAPE_HPP
#define PFL_NUM_TAPE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pfl/common.hpp"
#include "pfl/num/linalg.hpp"

namespace pfl::num {

class Tape;

// Handle to a tape node. Vectors are stored as n-by-1 matrices.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
// which is a topological order of the graph, so the backward pass is a single
// reverse sweep. The tape is rebuilt for every differentiation pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf owning a copy of the value.
  Var leaf(Matrix value);
  // Leaf referencing external storage; the storage must stay alive and
  // unmodified for the lifetime of the tape (parameter tensors).
  Var leaf_ref(const Matrix& stable_storage);
  Var constant(Matrix value) { return leaf(std::move(value)); }
  Var scalar(double v) { return leaf(Matrix::Constant(1, 1, v)); }

  const Matrix& val(Var v) const;
  // Accumulated adjoint; zero matrix of the value's shape if the node was
  // never reached by the backward sweep.
  Matrix adjoint(Var v) const;

  Index rows(Var v) const { return val(v).rows(); }
  Index cols(Var v) const { return val(v).cols(); }

  // --- arithmetic -----------------------------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var matmul(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var affine(Var a, double alpha, double beta);  // alpha*a + beta, elementwise
  Var add_diag(Var a, double s);
  Var transpose(Var a);
  Var sum(Var a);  // 1x1

  // --- elementwise nonlinearities --------------------------------------
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var abs(Var a);

  // --- broadcast / layout ----------------------------------------------
  Var add_col_broadcast(Var a, Var col);  // A + c*1^T
  Var add_row_broadcast(Var a, Var col);  // A_ij + c_j (bias per column)
  Var slice_rows(Var a, Index first, Index count);
  Var slice_cols(Var a, Index first, Index count);
  Var col(Var a, Index j) { return slice_cols(a, j, 1); }
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  // Column gather; duplicate indices accumulate adjoints into the source.
  Var select_cols(Var a, const std::vector<Index>& idx);

  // --- structured ops ---------------------------------------------------
  // K_ij = exp(-(z_i - z_j)^2) for a column vector z.
  Var kernel_gauss(Var z);
  // Lower Cholesky factor of a + jitter*I (a symmetric PSD). The jitter is
  // fixed by the caller; escalation happens before the node is created.
  Var cholesky(Var a, double jitter);

  // --- log-density blocks (scalar outputs, summed over all entries) -----
  // Sum of log N(r_ij; 0, sigma2) over all entries of the residual matrix.
  Var loglik_gauss_iso(Var resid, double sigma2);
  // Shifted exponential with mean 0, variance sigma^2: support r >= -sigma,
  // log density -log(sigma) - (r+sigma)/sigma inside, floor_log outside.
  Var loglik_shifted_exp(Var resid, double sigma, double floor_log);
  // Centered uniform on [-sigma*sqrt(3), sigma*sqrt(3)], floored outside.
  Var loglik_centered_uniform(Var resid, double sigma, double floor_log);

  // Entries that fell back to the density floor since the last reset.
  std::int64_t floor_hits() const { return floor_hits_; }
  void reset_floor_hits() { floor_hits_ = 0; }

  // Reverse sweep from a scalar loss node. Adjoints accumulate; leaves keep
  // theirs until the tape is destroyed or cleared.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix adj;
    std::function<void(Tape&, const Matrix&)> pull;  // empty for leaves
  };

  Var push(Matrix value, std::function<void(Tape&, const Matrix&)> pull);
  void accumulate(Var v, const Matrix& contribution);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::int64_t floor_hits_ = 0;
};

// Gradient lookup helper: adjoint of `v` after backward(), or zeros.
Matrix gradient(const Tape& tape, Var v);

}  // namespace pfl::num

#endif  // PFL_NUM_TAPE_HPP
