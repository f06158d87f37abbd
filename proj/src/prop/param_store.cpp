#include "pfl/prop/param_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

namespace pfl::prop {

namespace {
constexpr char kMagic[8] = {'P', 'F', 'L', 'C', 'K', '0', '0', '1'};
}

Matrix& ParamStore::create(const std::string& name, Matrix init) {
  require_finite(init, "param " + name);
  auto [it, inserted] = entries_.try_emplace(name);
  if (!inserted) throw StoreError("parameter already registered: " + name);
  it->second.value = std::move(init);
  return it->second.value;
}

bool ParamStore::has(const std::string& name) const { return entries_.count(name) != 0; }

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw StoreError("unknown parameter: " + name);
  return it->second;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw StoreError("unknown parameter: " + name);
  return it->second;
}

const Matrix& ParamStore::value(const std::string& name) const { return entry(name).value; }
Matrix& ParamStore::mutable_value(const std::string& name) { return entry(name).value; }

const Matrix& ParamStore::grad(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.grad.size() == 0) {
    static thread_local Matrix zeros;
    zeros = Matrix::Zero(e.value.rows(), e.value.cols());
    return zeros;
  }
  return e.grad;
}

void ParamStore::set_grad(const std::string& name, Matrix g) {
  Entry& e = entry(name);
  if (g.size() != 0 && (g.rows() != e.value.rows() || g.cols() != e.value.cols()))
    throw DimensionError("gradient shape mismatch for " + name);
  e.grad = std::move(g);
}

void ParamStore::clear_grads() {
  for (auto& [name, e] : entries_) e.grad.resize(0, 0);
}

num::AdamSlot& ParamStore::adam_slot(const std::string& name) { return entry(name).slot; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::int64_t ParamStore::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

double ParamStore::grad_global_norm() const {
  double acc = 0.0;
  for (const auto& [name, e] : entries_)
    if (e.grad.size() != 0) acc += e.grad.squaredNorm();
  return std::sqrt(acc);
}

void ParamStore::scale_grads(double factor) {
  for (auto& [name, e] : entries_)
    if (e.grad.size() != 0) e.grad *= factor;
}

std::uint64_t ParamStore::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [name, e] : entries_) {
    feed(name.data(), name.size());
    const std::int64_t r = e.value.rows(), c = e.value.cols();
    feed(&r, sizeof r);
    feed(&c, sizeof c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) {
        const double v = e.value(i, j);
        feed(&v, sizeof v);
      }
  }
  return h;
}

void ParamStore::save(std::ostream& os) const {
  os.write(kMagic, sizeof kMagic);
  const std::uint64_t count = entries_.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& [name, e] : entries_) {
    const std::uint32_t len = static_cast<std::uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof len);
    os.write(name.data(), len);
    const std::uint64_t r = static_cast<std::uint64_t>(e.value.rows());
    const std::uint64_t c = static_cast<std::uint64_t>(e.value.cols());
    os.write(reinterpret_cast<const char*>(&r), sizeof r);
    os.write(reinterpret_cast<const char*>(&c), sizeof c);
    for (std::uint64_t i = 0; i < r; ++i)
      for (std::uint64_t j = 0; j < c; ++j) {
        const double v = e.value(static_cast<Index>(i), static_cast<Index>(j));
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  }
  if (!os) throw IoError("checkpoint write failed");
}

ParamStore ParamStore::load(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError("checkpoint: bad magic or unsupported version");
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  ParamStore store;
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string name(len, '\0');
    is.read(name.data(), len);
    std::uint64_t r = 0, c = 0;
    is.read(reinterpret_cast<char*>(&r), sizeof r);
    is.read(reinterpret_cast<char*>(&c), sizeof c);
    if (!is) throw IoError("checkpoint: truncated header for entry " + std::to_string(k));
    Matrix m(static_cast<Index>(r), static_cast<Index>(c));
    for (std::uint64_t i = 0; i < r; ++i)
      for (std::uint64_t j = 0; j < c; ++j) {
        double v = 0.0;
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        m(static_cast<Index>(i), static_cast<Index>(j)) = v;
      }
    if (!is) throw IoError("checkpoint: truncated values for " + name);
    store.create(name, std::move(m));
  }
  return store;
}

void ParamStore::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  save(os);
}

ParamStore ParamStore::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  return load(is);
}

Matrix init_weight(Index rows, Index cols, num::Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return rng.uniform_matrix(rows, cols, -bound, bound);
}

}  // namespace pfl::prop
