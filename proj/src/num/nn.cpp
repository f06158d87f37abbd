#include "pfl/num/nn.hpp"

#include <cmath>

namespace pfl::num {

Vector mlp_forward(const std::vector<AffineLayer>& layers, const Vector& input) {
  Vector z = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const AffineLayer& layer = layers[l];
    if (layer.W.cols() != z.size() || layer.W.rows() != layer.b.size())
      throw DimensionError("mlp_forward: layer " + std::to_string(l) + " shape mismatch");
    z = ((layer.W * z + layer.b).array().tanh()).matrix();
  }
  return z;
}

void lstm_step(const LstmParams& p, const Vector& input, Vector& h, Vector& c) {
  const Index hdim = p.hidden();
  if (p.Wx.rows() != 4 * hdim || p.bias.size() != 4 * hdim)
    throw DimensionError("lstm_step: stacked gate rows must be 4H");
  if (p.Wx.cols() != input.size())
    throw DimensionError("lstm_step: input size mismatch");
  if (h.size() != hdim || c.size() != hdim)
    throw DimensionError("lstm_step: hidden state size mismatch");

  const Vector a = p.Wx * input + p.Wh * h + p.bias;
  const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (Index i = 0; i < hdim; ++i) {
    const double gi = sig(a(i));
    const double gf = sig(a(hdim + i));
    const double go = sig(a(2 * hdim + i));
    const double gc = std::tanh(a(3 * hdim + i));
    c(i) = gf * c(i) + gi * gc;
    h(i) = go * std::tanh(c(i));
  }
}

Matrix graph_filter(const Matrix& s, const Matrix& x, const std::vector<Matrix>& coeffs) {
  if (s.rows() != s.cols()) throw DimensionError("graph_filter: graph matrix not square");
  if (x.rows() != s.rows()) throw DimensionError("graph_filter: signal/graph size mismatch");
  if (coeffs.empty()) throw DimensionError("graph_filter: no coefficients");
  const Index f = x.cols();
  const Index g = coeffs[0].cols();
  for (const Matrix& w : coeffs)
    if (w.rows() != f || w.cols() != g)
      throw DimensionError("graph_filter: coefficient shape mismatch");

  Matrix shifted = x;
  Matrix out = shifted * coeffs[0];
  for (std::size_t d = 1; d < coeffs.size(); ++d) {
    shifted = s * shifted;
    out += shifted * coeffs[d];
  }
  return out;
}

Matrix kernel_gauss(const Vector& z) {
  const Index n = z.size();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = z(i) - z(j);
      k(i, j) = std::exp(-d * d);
    }
  return k;
}

}  // namespace pfl::num
