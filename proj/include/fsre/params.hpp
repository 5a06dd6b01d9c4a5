#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fsre/diff.hpp"
#include "fsre/types.hpp"

namespace fsre {

// Named learnable tensors. Names are unique and shapes are fixed once added;
// insertion order is preserved so optimizer sweeps are deterministic.
template <typename S>
class ParamSet {
 public:
  Matrix<S>& add(const std::string& name, long rows, long cols) {
    if (values_.count(name)) throw_internal("param '" + name + "' already exists");
    names_.push_back(name);
    return values_[name] = Matrix<S>::Zero(rows, cols);
  }

  Matrix<S>& at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw_internal("unknown param '" + name + "'");
    return it->second;
  }

  const Matrix<S>& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw_internal("unknown param '" + name + "'");
    return it->second;
  }

  bool has(const std::string& name) const { return values_.count(name) > 0; }
  const std::vector<std::string>& names() const { return names_; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : values_) n += static_cast<std::size_t>(m.size());
    return n;
  }

  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out;
    for (const std::string& name : names_) {
      out.add(name, at(name).rows(), at(name).cols()) = at(name).template cast<T>();
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, Matrix<S>> values_;
};

template <typename S>
void fill_uniform(Matrix<S>& m, S scale, Rng& rng) {
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      m(i, j) = scale * (S(2) * static_cast<S>(rng.uniform()) - S(1));
    }
  }
}

// Leaves for every parameter on one tape.
template <typename S>
struct BoundParams {
  std::map<std::string, Var<S>> vars;

  Var<S> at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw_internal("unbound param '" + name + "'");
    return it->second;
  }
};

template <typename S>
BoundParams<S> bind_params(Tape<S>& tape, const ParamSet<S>& params) {
  BoundParams<S> bound;
  for (const std::string& name : params.names()) {
    bound.vars[name] = tape.leaf(params.at(name), true, "param");
  }
  return bound;
}

// After a backward pass, pulls parameter gradients out of the tape.
template <typename S>
GradMap<S> collect_grads(const BoundParams<S>& bound) {
  GradMap<S> grads;
  for (const auto& [name, var] : bound.vars) {
    if (var.node->requires_grad && var.node->grad.size() > 0) {
      grads[name] = var.node->grad;
    }
  }
  return grads;
}

// Builds a fresh graph over the parameters, runs backward, and returns
// d(loss)/d(param) for the requested names (all bound params when empty).
template <typename S>
GradMap<S> grad(const ParamSet<S>& params, const std::vector<std::string>& wrt,
                const std::function<Var<S>(Tape<S>&, const BoundParams<S>&)>& build_loss) {
  Tape<S> tape;
  BoundParams<S> bound = bind_params(tape, params);
  Var<S> loss = build_loss(tape, bound);
  tape.backward(loss);
  GradMap<S> all = collect_grads(bound);
  if (wrt.empty()) return all;
  GradMap<S> out;
  for (const std::string& name : wrt) {
    auto it = all.find(name);
    if (it == all.end()) throw_internal("grad: unknown param '" + name + "'");
    out[name] = it->second;
  }
  return out;
}

// ------------------------------------------------------------------
// Checkpoints: versioned binary container of name -> shape + row-major
// 64-bit payload, with an optional JSON sidecar (written as <path>.json).

namespace detail {

constexpr char kCheckpointMagic[8] = {'F', 'S', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace detail

template <typename S>
void save_checkpoint(const ParamSet<S>& params, const std::string& path,
                     const std::string& sidecar_json = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write checkpoint '" + path + "'");
  out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::write_pod(out, detail::kCheckpointVersion);
  detail::write_pod(out, static_cast<std::uint64_t>(params.names().size()));
  for (const std::string& name : params.names()) {
    const Matrix<S>& m = params.at(name);
    detail::write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod(out, static_cast<std::uint64_t>(m.rows()));
    detail::write_pod(out, static_cast<std::uint64_t>(m.cols()));
    for (long i = 0; i < m.rows(); ++i) {
      for (long j = 0; j < m.cols(); ++j) {
        detail::write_pod(out, static_cast<double>(m(i, j)));
      }
    }
  }
  if (!out) throw_data("failed writing checkpoint '" + path + "'");
  if (!sidecar_json.empty()) {
    std::ofstream side(path + ".json");
    if (!side) throw_data("cannot write checkpoint sidecar '" + path + ".json'");
    side << sidecar_json;
  }
}

template <typename S>
ParamSet<S> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(detail::kCheckpointMagic, 8)) {
    throw_data("'" + path + "' is not a checkpoint file");
  }
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != detail::kCheckpointVersion) {
    throw_data("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = detail::read_pod<std::uint64_t>(in);
  ParamSet<S> params;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = detail::read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = static_cast<long>(detail::read_pod<std::uint64_t>(in));
    const auto cols = static_cast<long>(detail::read_pod<std::uint64_t>(in));
    if (!in || rows < 0 || cols < 0) throw_data("truncated checkpoint '" + path + "'");
    Matrix<S>& m = params.add(name, rows, cols);
    for (long i = 0; i < rows; ++i) {
      for (long j = 0; j < cols; ++j) {
        m(i, j) = static_cast<S>(detail::read_pod<double>(in));
      }
    }
  }
  if (!in) throw_data("truncated checkpoint '" + path + "'");
  return params;
}

inline std::string load_checkpoint_sidecar(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) return {};
  std::string text((std::istreambuf_iterator<char>(side)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace fsre
