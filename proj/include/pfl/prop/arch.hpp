#ifndef PFL_PROP_ARCH_HPP
#define PFL_PROP_ARCH_HPP

#include <string>
#include <vector>

#include "pfl/prop/engines.hpp"

namespace pfl::prop {

// Architecture forwards shared by the filtering and training paths. Inputs
// are batched column-per-particle. Parameter names follow the layout created
// by the corresponding init_* functions in learned.hpp.

inline std::string block_name(const std::string& prefix, int layer) {
  return prefix + "/l" + std::to_string(layer);
}

inline std::string layer_name(const std::string& prefix, int layer, const char* what) {
  return block_name(prefix, layer) + "/" + what;
}

// Affine cascade with tanh on the hidden blocks and a linear output block.
template <class E>
typename E::V dense_head(E& e, const std::string& prefix, typename E::V input, int blocks) {
  typename E::V z = input;
  for (int l = 0; l < blocks; ++l) {
    typename E::V w = e.param(layer_name(prefix, l, "W"));
    typename E::V b = e.param(layer_name(prefix, l, "b"));
    z = e.add_col_broadcast(e.matmul(w, z), b);
    if (l + 1 < blocks) z = e.tanh(z);
  }
  return z;
}

// Batched LSTM cell; h and c are H x K handles updated in place.
template <class E>
void lstm_cell(E& e, const std::string& prefix, typename E::V input, typename E::V& h,
               typename E::V& c) {
  const Index hdim = e.value(h).rows();
  typename E::V a = e.add_col_broadcast(
      e.add(e.matmul(e.param(prefix + "/Wx"), input), e.matmul(e.param(prefix + "/Wh"), h)),
      e.param(prefix + "/b"));
  typename E::V gi = e.sigmoid(e.slice_rows(a, 0, hdim));
  typename E::V gf = e.sigmoid(e.slice_rows(a, hdim, hdim));
  typename E::V go = e.sigmoid(e.slice_rows(a, 2 * hdim, hdim));
  typename E::V gc = e.tanh(e.slice_rows(a, 3 * hdim, hdim));
  c = e.add(e.hadamard(gf, c), e.hadamard(gi, gc));
  h = e.hadamard(go, e.tanh(c));
}

// Graph convolution sum_d S^d Z W_d with per-feature bias, for one layer.
template <class E>
typename E::V graph_conv(E& e, const std::string& prefix, typename E::V s, typename E::V z,
                         int order) {
  typename E::V acc = e.matmul(z, e.param(prefix + "/d0/W"));
  typename E::V shifted = z;
  for (int d = 1; d <= order; ++d) {
    shifted = e.matmul(s, shifted);
    acc = e.add(acc, e.matmul(shifted, e.param(prefix + "/d" + std::to_string(d) + "/W")));
  }
  return e.add_row_broadcast(acc, e.param(prefix + "/b"));
}

// Graph head: cascade of graph convolutions, tanh on hidden layers, linear
// last layer. Input is the N x F node-feature matrix of one particle.
template <class E>
typename E::V gnn_head(E& e, const std::string& prefix, typename E::V s, typename E::V input,
                       int blocks, int order) {
  typename E::V z = input;
  for (int l = 0; l < blocks; ++l) {
    z = graph_conv(e, block_name(prefix, l), s, z, order);
    if (l + 1 < blocks) z = e.tanh(z);
  }
  return z;
}

// Invertible-by-construction transform: z0 = A u + B x_prev + C y, then
// blocks z_l = tanh(W_l z_{l-1}) + b_l. Batched over columns.
template <class E>
typename E::V psi_transform(E& e, const std::string& prefix, typename E::V u,
                            typename E::V x_prev, typename E::V y_rep, int blocks) {
  typename E::V z = e.add(e.add(e.matmul(e.param(prefix + "/A"), u),
                                e.matmul(e.param(prefix + "/B"), x_prev)),
                          e.matmul(e.param(prefix + "/Cy"), y_rep));
  for (int l = 1; l <= blocks; ++l) {
    typename E::V w = e.param(layer_name(prefix, l, "W"));
    typename E::V b = e.param(layer_name(prefix, l, "b"));
    z = e.add_col_broadcast(e.tanh(e.matmul(w, z)), b);
  }
  return z;
}

}  // namespace pfl::prop

#endif  // PFL_PROP_ARCH_HPP
