#ifndef PFL_PROP_PARAM_STORE_HPP
#define PFL_PROP_PARAM_STORE_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pfl/common.hpp"
#include "pfl/num/adam.hpp"
#include "pfl/num/rng.hpp"

namespace pfl::prop {

// Flat registry of learnable tensors addressed by stable names. Per-time-step
// families index names by t (e.g. "mlp/mu/t3/l0/W"); shared families use
// t-free names. Gradients and Adam moments live alongside each tensor.
class ParamStore {
 public:
  Matrix& create(const std::string& name, Matrix init);
  bool has(const std::string& name) const;
  const Matrix& value(const std::string& name) const;
  Matrix& mutable_value(const std::string& name);
  const Matrix& grad(const std::string& name) const;
  void set_grad(const std::string& name, Matrix g);
  void clear_grads();
  num::AdamSlot& adam_slot(const std::string& name);

  std::vector<std::string> names() const;  // deterministic (sorted) order
  std::size_t size() const { return entries_.size(); }
  std::size_t tensor_count() const { return entries_.size(); }
  std::int64_t scalar_count() const;

  double grad_global_norm() const;
  void scale_grads(double factor);

  // FNV-1a over names, shapes, and raw values in name order.
  std::uint64_t checksum() const;

  // Versioned binary container: name -> shape + row-major doubles.
  // Round-trips bit-exactly on a native little-endian build.
  void save(std::ostream& os) const;
  static ParamStore load(std::istream& is);
  void save_file(const std::string& path) const;
  static ParamStore load_file(const std::string& path);

 private:
  struct Entry {
    Matrix value;
    Matrix grad;
    num::AdamSlot slot;
  };
  const Entry& entry(const std::string& name) const;
  Entry& entry(const std::string& name);

  std::map<std::string, Entry> entries_;
};

// Scaled-uniform weight initialization on +-sqrt(6/(fan_in+fan_out)).
Matrix init_weight(Index rows, Index cols, num::Rng& rng);

}  // namespace pfl::prop

#endif  // PFL_PROP_PARAM_STORE_HPP
