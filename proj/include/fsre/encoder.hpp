#pragma once

#include <string>
#include <vector>

#include "fsre/diff.hpp"
#include "fsre/params.hpp"
#include "fsre/types.hpp"

namespace fsre {

struct EncoderConfig {
  int vocab_size = 0;
  int d = 32;
  int heads = 4;
  int layers = 2;
  int max_len = 512;
  int ffn_dim = 64;
  std::string attn_source = "final";  // "final" or "mean" over layers

  void validate() const {
    if (vocab_size <= 0 || d <= 0 || heads <= 0 || layers <= 0 || max_len <= 0 || ffn_dim <= 0) {
      throw_config("encoder config fields must all be positive");
    }
    if (d % heads != 0) {
      throw_config("hidden dim " + std::to_string(d) + " must be divisible by " +
                   std::to_string(heads) + " heads");
    }
    if (attn_source != "final" && attn_source != "mean") {
      throw_config("attention source must be 'final' or 'mean', got '" + attn_source + "'");
    }
  }
};

// Contextual token states (l x d) plus per-head attention matrices (each
// l x l, rows are distributions over attended positions).
template <typename S>
struct EncoderOutput {
  Var<S> states;
  std::vector<Var<S>> attention;
};

namespace enc_detail {

inline std::string lname(int layer, const char* field) {
  return "enc.L" + std::to_string(layer) + "." + field;
}

}  // namespace enc_detail

template <typename S>
ParamSet<S> init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamSet<S> params;
  Rng rng(hash_combine(seed, hash_str("encoder-init")));
  auto uniform_in = [&](Matrix<S>& m, long fan_in) {
    fill_uniform(m, S(1) / std::sqrt(static_cast<S>(fan_in)), rng);
  };

  uniform_in(params.add("enc.embed", cfg.vocab_size, cfg.d), cfg.d);
  uniform_in(params.add("enc.pos", cfg.max_len, cfg.d), cfg.d);
  for (int i = 0; i < cfg.layers; ++i) {
    params.add(enc_detail::lname(i, "ln1.g"), 1, cfg.d).setOnes();
    params.add(enc_detail::lname(i, "ln1.b"), 1, cfg.d);
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
      uniform_in(params.add(enc_detail::lname(i, w), cfg.d, cfg.d), cfg.d);
    }
    for (const char* b : {"bq", "bk", "bv", "bo"}) {
      params.add(enc_detail::lname(i, b), 1, cfg.d);
    }
    params.add(enc_detail::lname(i, "ln2.g"), 1, cfg.d).setOnes();
    params.add(enc_detail::lname(i, "ln2.b"), 1, cfg.d);
    uniform_in(params.add(enc_detail::lname(i, "ffn.w1"), cfg.d, cfg.ffn_dim), cfg.d);
    params.add(enc_detail::lname(i, "ffn.b1"), 1, cfg.ffn_dim);
    uniform_in(params.add(enc_detail::lname(i, "ffn.w2"), cfg.ffn_dim, cfg.d), cfg.ffn_dim);
    params.add(enc_detail::lname(i, "ffn.b2"), 1, cfg.d);
  }
  params.add("enc.lnf.g", 1, cfg.d).setOnes();
  params.add("enc.lnf.b", 1, cfg.d);
  return params;
}

// Pre-norm transformer forward pass. The optional perturbation is added to
// the word-embedding lookup before anything else, and the output stays
// differentiable with respect to it.
template <typename S>
EncoderOutput<S> encode(Tape<S>& tape, const BoundParams<S>& bound, const EncoderConfig& cfg,
                        const std::vector<int>& tokens, Var<S> perturbation = {}) {
  cfg.validate();
  const int l = static_cast<int>(tokens.size());
  if (l == 0) throw_data("encoder input is empty");
  if (l > cfg.max_len) {
    throw_data("sequence length " + std::to_string(l) + " exceeds encoder max " +
               std::to_string(cfg.max_len));
  }
  for (int id : tokens) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw_data("token id " + std::to_string(id) + " outside vocabulary of size " +
                 std::to_string(cfg.vocab_size));
    }
  }

  Var<S> x = gather_rows(bound.at("enc.embed"), tokens);
  if (perturbation) {
    if (perturbation.rows() != l || perturbation.cols() != cfg.d) {
      throw_data("perturbation shape " + std::to_string(perturbation.rows()) + "x" +
                 std::to_string(perturbation.cols()) + " does not match sequence " +
                 std::to_string(l) + "x" + std::to_string(cfg.d));
    }
    x = add(x, perturbation);
  }
  std::vector<int> positions(l);
  for (int i = 0; i < l; ++i) positions[i] = i;
  x = add(x, gather_rows(bound.at("enc.pos"), positions));

  const int dh = cfg.d / cfg.heads;
  const S inv_sqrt_dh = S(1) / std::sqrt(static_cast<S>(dh));
  std::vector<std::vector<Var<S>>> per_layer_attention;

  for (int i = 0; i < cfg.layers; ++i) {
    auto p = [&](const char* field) { return bound.at(enc_detail::lname(i, field)); };
    Var<S> u = layer_norm_rows(x, p("ln1.g"), p("ln1.b"));
    Var<S> q = add_rowvec(matmul(u, p("wq")), p("bq"));
    Var<S> k = add_rowvec(matmul(u, p("wk")), p("bk"));
    Var<S> v = add_rowvec(matmul(u, p("wv")), p("bv"));

    std::vector<Var<S>> heads;
    std::vector<Var<S>> contexts;
    for (int h = 0; h < cfg.heads; ++h) {
      Var<S> qh = slice_cols(q, h * dh, dh);
      Var<S> kh = slice_cols(k, h * dh, dh);
      Var<S> vh = slice_cols(v, h * dh, dh);
      Var<S> a = softmax_rows(affine(matmul(qh, transpose(kh)), inv_sqrt_dh, S(0)));
      heads.push_back(a);
      contexts.push_back(matmul(a, vh));
    }
    per_layer_attention.push_back(heads);
    Var<S> attn_out = add_rowvec(matmul(concat_cols(contexts), p("wo")), p("bo"));
    x = add(x, attn_out);

    Var<S> w = layer_norm_rows(x, p("ln2.g"), p("ln2.b"));
    Var<S> ffn = add_rowvec(
        matmul(gelu(add_rowvec(matmul(w, p("ffn.w1")), p("ffn.b1"))), p("ffn.w2")),
        p("ffn.b2"));
    x = add(x, ffn);
  }

  EncoderOutput<S> out;
  out.states = layer_norm_rows(x, bound.at("enc.lnf.g"), bound.at("enc.lnf.b"));
  if (cfg.attn_source == "final") {
    out.attention = per_layer_attention.back();
  } else {
    const S inv_layers = S(1) / static_cast<S>(cfg.layers);
    for (int h = 0; h < cfg.heads; ++h) {
      Var<S> acc = per_layer_attention[0][h];
      for (int i = 1; i < cfg.layers; ++i) acc = add(acc, per_layer_attention[i][h]);
      out.attention.push_back(affine(acc, inv_layers, S(0)));
    }
  }
  return out;
}

}  // namespace fsre
