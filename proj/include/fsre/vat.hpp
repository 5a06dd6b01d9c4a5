#pragma once

#include <string>
#include <vector>

#include "fsre/model.hpp"

namespace fsre {

// Projected-gradient ascent on the word embeddings: rho ascent steps inside
// an epsilon Frobenius ball, one parameter descent on the averaged gradients.
struct VatConfig {
  enum class Init { kZeros, kUniformBall };

  int rho = 3;
  double gamma = 0.15;
  double epsilon = 0.45;
  Init init = Init::kZeros;

  void validate() const {
    if (rho < 1) throw_config("rho must be at least 1");
    if (!(gamma > 0.0)) throw_config("gamma must be positive");
    if (!(epsilon > 0.0)) throw_config("epsilon must be positive");
  }
};

inline VatConfig::Init vat_init_from_name(const std::string& name) {
  if (name == "zeros") return VatConfig::Init::kZeros;
  if (name == "uniform_ball") return VatConfig::Init::kUniformBall;
  throw_config("unknown perturbation init '" + name + "'");
}

namespace vat_detail {

template <typename S>
void project_ball(Matrix<S>& xi, S eps) {
  const S norm = xi.norm();
  if (norm > eps) xi *= eps / norm;
}

}  // namespace vat_detail

// zeros: xi = 0. uniform_ball: i.i.d. U(-1,1) entries scaled by eps/sqrt(l*d)
// so the Frobenius norm is bounded by eps, then projected.
template <typename S>
Matrix<S> init_perturbation(long l, long d, S eps, VatConfig::Init mode, std::uint64_t seed) {
  if (l <= 0 || d <= 0) throw_internal("perturbation shape must be positive");
  Matrix<S> xi = Matrix<S>::Zero(l, d);
  if (mode == VatConfig::Init::kUniformBall) {
    Rng rng(hash_combine(seed, hash_str("vat-init")));
    const S scale = eps / std::sqrt(static_cast<S>(l * d));
    for (long i = 0; i < l; ++i) {
      for (long j = 0; j < d; ++j) {
        xi(i, j) = scale * (S(2) * static_cast<S>(rng.uniform()) - S(1));
      }
    }
    vat_detail::project_ball(xi, eps);
  }
  return xi;
}

// One ascent step along the Frobenius-normalized gradient, then projection.
template <typename S>
Matrix<S> perturbation_step(const Matrix<S>& xi_prev, const Matrix<S>& g_adv, S gamma, S eps) {
  if (xi_prev.rows() != g_adv.rows() || xi_prev.cols() != g_adv.cols()) {
    throw_internal("perturbation and gradient shapes differ");
  }
  const S g_norm = g_adv.norm();
  if (!(g_norm > S(1e-12))) {
    throw_numeric("adversarial gradient norm " + std::to_string(static_cast<double>(g_norm)) +
                  " is too small for an ascent step");
  }
  Matrix<S> xi = xi_prev + (gamma / g_norm) * g_adv;
  vat_detail::project_ball(xi, eps);
  return xi;
}

template <typename S>
struct VatResult {
  S loss = S(0);         // mean loss over the rho ascent steps
  GradMap<S> grads;      // parameter gradients averaged by 1/rho
  long pair_count = 0;
  // ||xi||_F per document: the initial norms, then one block per ascent step,
  // all in support-then-query order.
  std::vector<S> xi_norms;
};

// Runs the rho-step inner loop on one episode. Every document (support and
// query) carries its own perturbation; the in-episode subsample seed is held
// fixed so all rho passes optimize the same loss surface. A vanishing
// adversarial gradient raises a numeric error; callers treat that as an
// episode skip.
template <typename S>
VatResult<S> freelb_episode(const ParamSet<S>& params, const ModelConfig& cfg,
                            const Corpus& corpus, const Episode& episode, const Vocab& vocab,
                            std::uint64_t seed, const VatConfig& vat) {
  vat.validate();
  cfg.validate();
  const S eps = static_cast<S>(vat.epsilon);
  const S gamma = static_cast<S>(vat.gamma);

  std::vector<int> doc_ids;
  for (const SupportDoc& s : episode.support) doc_ids.push_back(s.doc);
  for (int q : episode.query) doc_ids.push_back(q);

  VatResult<S> res;
  std::vector<Matrix<S>> xi;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    const FlatDocument flat = flatten_tokens(corpus.documents[doc_ids[i]], cfg.encoder.max_len);
    xi.push_back(init_perturbation<S>(flat.length, cfg.encoder.d, eps, vat.init,
                                      hash_combine(seed, i)));
    res.xi_norms.push_back(xi.back().norm());
  }

  for (int t = 0; t < vat.rho; ++t) {
    Tape<S> tape;
    BoundParams<S> bound = bind_params(tape, params);
    std::vector<Var<S>> xiv;
    for (const Matrix<S>& x : xi) xiv.push_back(tape.leaf(x, true, "xi"));

    EpisodeGraph<S> graph =
        build_episode_graph(tape, bound, cfg, corpus, episode, vocab, seed, &xiv);
    Var<S> loss = episode_loss(tape, graph, cfg);
    tape.backward(loss);

    res.loss += loss.value()(0, 0);
    res.pair_count = static_cast<long>(graph.pairs.size());
    for (const auto& [name, g] : collect_grads(bound)) {
      auto it = res.grads.find(name);
      if (it == res.grads.end()) {
        res.grads[name] = g;
      } else {
        it->second += g;
      }
    }
    for (std::size_t i = 0; i < xi.size(); ++i) {
      xi[i] = perturbation_step(xi[i], xiv[i].grad(), gamma, eps);
      res.xi_norms.push_back(xi[i].norm());
    }
  }

  const S inv_rho = S(1) / static_cast<S>(vat.rho);
  res.loss *= inv_rho;
  for (auto& [name, g] : res.grads) g *= inv_rho;
  return res;
}

}  // namespace fsre
