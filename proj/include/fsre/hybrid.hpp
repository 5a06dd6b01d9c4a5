#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fsre/encoder.hpp"

namespace fsre {

using Spans = std::vector<std::pair<int, int>>;  // global [start, end) token spans

enum class PoolMode { kToken, kMention };

// What to do when a pair's localized attention carries no mass: verification
// wants a hard failure, training falls back to uniform weights.
enum class DegeneratePolicy { kError, kUniform };

namespace hybrid_detail {

inline std::vector<int> span_tokens(const Spans& spans, long l, const char* what) {
  if (spans.empty()) throw_data(std::string(what) + ": entity has no mentions");
  std::vector<int> idx;
  for (auto [s, e] : spans) {
    if (s < 0 || s >= e || e > l) {
      throw_data(std::string(what) + ": span [" + std::to_string(s) + "," + std::to_string(e) +
                 ") outside sequence of length " + std::to_string(l));
    }
    for (int t = s; t < e; ++t) idx.push_back(t);
  }
  return idx;
}

}  // namespace hybrid_detail

// Global entity embedding: mean over mention tokens (token-level), or mean of
// per-mention means.
template <typename S>
Var<S> entity_embedding(const EncoderOutput<S>& out, const Spans& spans,
                        PoolMode mode = PoolMode::kToken) {
  const long l = out.states.rows();
  if (mode == PoolMode::kToken) {
    return mean_rows(out.states, hybrid_detail::span_tokens(spans, l, "entity_embedding"));
  }
  std::vector<Var<S>> per_mention;
  for (auto [s, e] : spans) {
    per_mention.push_back(
        mean_rows(out.states, hybrid_detail::span_tokens({{s, e}}, l, "entity_embedding")));
  }
  return mean_rows(concat_rows(per_mention), [&] {
    std::vector<int> all(per_mention.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }());
}

// Entity-level attention: per head, the mean attention row of the entity's
// mention tokens. Result is heads x l.
template <typename S>
Var<S> entity_attention(const EncoderOutput<S>& out, const Spans& spans,
                        PoolMode mode = PoolMode::kToken) {
  const long l = out.states.rows();
  const std::vector<int> idx = hybrid_detail::span_tokens(spans, l, "entity_attention");
  std::vector<Var<S>> rows;
  for (const Var<S>& head : out.attention) {
    if (mode == PoolMode::kToken) {
      rows.push_back(mean_rows(head, idx));
    } else {
      std::vector<Var<S>> per_mention;
      for (auto [s, e] : spans) {
        per_mention.push_back(
            mean_rows(head, hybrid_detail::span_tokens({{s, e}}, l, "entity_attention")));
      }
      std::vector<int> all(per_mention.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      rows.push_back(mean_rows(concat_rows(per_mention), all));
    }
  }
  return concat_rows(rows);
}

// Head-averaged elementwise product of the two entity-level attentions.
template <typename S>
Var<S> localized_attention(Var<S> a_s, Var<S> a_o) {
  detail::expect_same_shape(a_s, a_o, "localized_attention");
  const int heads = static_cast<int>(a_s.rows());
  std::vector<int> all(heads);
  for (int h = 0; h < heads; ++h) all[h] = h;
  return mean_rows(cwise_mul(a_s, a_o), all);
}

// Attention-weighted sum of token states, with the weights normalized to sum
// to one.
template <typename S>
Var<S> local_context(const EncoderOutput<S>& out, Var<S> localized,
                     DegeneratePolicy policy = DegeneratePolicy::kError) {
  detail::expect(localized.rows() == 1 && localized.cols() == out.states.rows(),
                 "local_context", "attention vector must be 1 x sequence length");
  const S total = localized.value().sum();
  if (!(total > S(1e-12))) {
    if (policy == DegeneratePolicy::kError) {
      throw_numeric("localized attention mass " + std::to_string(static_cast<double>(total)) +
                    " is degenerate");
    }
    log_warn("degenerate localized attention; falling back to uniform context weights");
    const long l = out.states.rows();
    Var<S> uniform = localized.tape->constant(
        Matrix<S>::Constant(1, l, S(1) / static_cast<S>(l)), "uniform_attn");
    return matmul(uniform, out.states);
  }
  Var<S> weights = div_by_scalarv(localized, sum_all(localized));
  return matmul(weights, out.states);
}

// z = tanh(W [h_e; c] + b) with side-specific parameters shared across pairs.
template <typename S>
Var<S> fuse(Var<S> h_e, Var<S> c, Var<S> w, Var<S> b) {
  detail::expect(w.cols() == h_e.cols() + c.cols(), "fuse",
                 "weight expects the concatenated width");
  Var<S> cat = concat_cols<S>({h_e, c});
  return vtanh(add(matmul(cat, transpose(w)), b));
}

// Adds the two fusion blocks (subject and object) to a parameter set.
template <typename S>
void init_fusion(ParamSet<S>& params, int d, Rng& rng) {
  const S scale = S(1) / std::sqrt(static_cast<S>(2 * d));
  fill_uniform(params.add("fuse.subj.w", d, 2 * d), scale, rng);
  params.add("fuse.subj.b", 1, d);
  fill_uniform(params.add("fuse.obj.w", d, 2 * d), scale, rng);
  params.add("fuse.obj.b", 1, d);
}

template <typename S>
struct PairRepr {
  Var<S> z_s;
  Var<S> z_o;
  Var<S> context;
  Var<S> concat;  // [z_s ; z_o], 1 x 2d
};

// Full pair pipeline: entity pooling, localized attention, shared context,
// and the two fusion blocks.
template <typename S>
PairRepr<S> instance_repr(const EncoderOutput<S>& out, const Spans& head, const Spans& tail,
                          const BoundParams<S>& bound,
                          DegeneratePolicy policy = DegeneratePolicy::kError,
                          PoolMode mode = PoolMode::kToken) {
  Var<S> h_s = entity_embedding(out, head, mode);
  Var<S> h_o = entity_embedding(out, tail, mode);
  Var<S> a_s = entity_attention(out, head, mode);
  Var<S> a_o = entity_attention(out, tail, mode);
  PairRepr<S> repr;
  repr.context = local_context(out, localized_attention(a_s, a_o), policy);
  repr.z_s = fuse(h_s, repr.context, bound.at("fuse.subj.w"), bound.at("fuse.subj.b"));
  repr.z_o = fuse(h_o, repr.context, bound.at("fuse.obj.w"), bound.at("fuse.obj.b"));
  repr.concat = concat_cols<S>({repr.z_s, repr.z_o});
  return repr;
}

// Indices of a seeded uniform subsample: identity when n fits the cap.
inline std::vector<std::size_t> capped_subset(std::size_t n, std::size_t cap, Rng& rng) {
  if (n <= cap) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  return rng.choose(n, cap);
}

template <typename S>
struct Prototype {
  std::string relation;
  std::vector<Var<S>> vectors;  // each 1 x 2d, at most omega of them
};

// Multi-vector relation prototype: keeps min(|instances|, omega) instance
// vectors, subsampled uniformly when over the cap. No averaging.
template <typename S>
Prototype<S> relation_prototype(const std::vector<Var<S>>& instances, const std::string& relation,
                                int omega, std::uint64_t seed) {
  if (instances.empty()) throw_data("relation '" + relation + "' has no support instances");
  if (omega <= 0) throw_config("prototype capacity must be positive");
  Rng rng(hash_combine(seed, hash_combine(hash_str(relation), hash_str("prototype"))));
  Prototype<S> proto;
  proto.relation = relation;
  for (std::size_t i : capped_subset(instances.size(), static_cast<std::size_t>(omega), rng)) {
    proto.vectors.push_back(instances[i]);
  }
  return proto;
}

}  // namespace fsre
