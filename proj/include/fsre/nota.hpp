#pragma once

#include <vector>

#include "fsre/diff.hpp"
#include "fsre/params.hpp"

namespace fsre {

// Learnable NOTA proto-learner: two stacked row-wise MLPs, each
// linear(2d -> h) -> tanh -> linear(h -> 2d). Parameters live under "tpl.".
template <typename S>
void init_proto_learner(ParamSet<S>& params, int two_d, int hidden, Rng& rng) {
  if (two_d <= 0 || hidden <= 0) throw_config("proto-learner dims must be positive");
  for (const char* block : {"tpl.m1", "tpl.m2"}) {
    const std::string p(block);
    fill_uniform(params.add(p + ".w1", two_d, hidden), S(1) / std::sqrt(static_cast<S>(two_d)),
                 rng);
    params.add(p + ".b1", 1, hidden);
    fill_uniform(params.add(p + ".w2", hidden, two_d), S(1) / std::sqrt(static_cast<S>(hidden)),
                 rng);
    params.add(p + ".b2", 1, two_d);
  }
}

// The fixed-vector baseline used by the "w/o TPL" ablation.
template <typename S>
void init_nota_global(ParamSet<S>& params, int two_d, Rng& rng) {
  fill_uniform(params.add("nota.global", 1, two_d), S(1) / std::sqrt(static_cast<S>(two_d)), rng);
}

// Indices of the NOTA instances entering the prototype: a seeded uniform
// sample without replacement, padded with replacement when the pool is
// smaller than beta so the prototype shape stays fixed.
inline std::vector<std::size_t> select_nota_indices(std::size_t pool_size, int beta,
                                                    std::uint64_t seed) {
  if (pool_size == 0) throw_data("NOTA instance pool is empty");
  if (beta <= 0) throw_config("beta must be positive");
  Rng rng(hash_combine(seed, hash_str("nota-select")));
  const auto b = static_cast<std::size_t>(beta);
  if (pool_size >= b) return rng.choose(pool_size, b);
  log_warn("NOTA pool holds " + std::to_string(pool_size) + " instances; padding to " +
           std::to_string(beta) + " with replacement");
  std::vector<std::size_t> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
  while (idx.size() < b) idx.push_back(rng.below(pool_size));
  return idx;
}

// Stacks the selected instance vectors into a beta x 2d matrix.
template <typename S>
Var<S> select_nota_instances(const std::vector<Var<S>>& pool, int beta, std::uint64_t seed) {
  std::vector<Var<S>> rows;
  for (std::size_t i : select_nota_indices(pool.size(), beta, seed)) rows.push_back(pool[i]);
  return concat_rows(rows);
}

// f applied row-wise: both MLPs composed. Output shape equals the input's.
template <typename S>
Var<S> nota_prototype(Var<S> selected, const BoundParams<S>& bound) {
  Var<S> x = selected;
  for (const char* block : {"tpl.m1", "tpl.m2"}) {
    const std::string p(block);
    detail::expect(x.cols() == bound.at(p + ".w1").rows(), "nota_prototype",
                   "instance width does not match the proto-learner");
    x = add_rowvec(matmul(vtanh(add_rowvec(matmul(x, bound.at(p + ".w1")), bound.at(p + ".b1"))),
                          bound.at(p + ".w2")),
                   bound.at(p + ".b2"));
  }
  return x;
}

}  // namespace fsre
