#ifndef PFL_NUM_NN_HPP
#define PFL_NUM_NN_HPP

#include <vector>

#include "pfl/common.hpp"

namespace pfl::num {

struct AffineLayer {
  Matrix W;
  Vector b;
};

struct LstmParams {
  // Gate order in the stacked rows: input, forget, output, candidate.
  Matrix Wx;  // 4H x D
  Matrix Wh;  // 4H x H
  Vector bias;  // 4H
  Index hidden() const { return Wh.cols(); }
};

// Cascade of affine blocks with tanh applied after every block.
Vector mlp_forward(const std::vector<AffineLayer>& layers, const Vector& input);

// Standard no-peephole LSTM cell. h and c have length H; the input carries
// the concatenated conditioning vector.
void lstm_step(const LstmParams& p, const Vector& input, Vector& h, Vector& c);

// Polynomial graph convolution: sum_d S^d X W_d, evaluated with iterated
// one-hop products (S^d is never formed).
Matrix graph_filter(const Matrix& s, const Matrix& x, const std::vector<Matrix>& coeffs);

// K_ij = exp(-(z_i - z_j)^2).
Matrix kernel_gauss(const Vector& z);

}  // namespace pfl::num

#endif  // PFL_NUM_NN_HPP
