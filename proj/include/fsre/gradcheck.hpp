#pragma once

#include <string>
#include <vector>

#include "fsre/model.hpp"

namespace fsre {

struct GradCheckRow {
  std::string name;
  double max_rel_err = 0.0;
};

// Central-finite-difference audit of the full episode loss: every learnable
// tensor plus one zero-anchored perturbation per document. Gradients are
// checked at the exact parameter point passed in.
template <typename S>
std::vector<GradCheckRow> gradcheck_episode(const ParamSet<S>& params, const ModelConfig& cfg,
                                            const Corpus& corpus, const Episode& episode,
                                            const Vocab& vocab, std::uint64_t seed,
                                            S h = S(1e-5)) {
  std::vector<long> doc_lengths;
  for (const SupportDoc& s : episode.support) {
    doc_lengths.push_back(flatten_tokens(corpus.documents[s.doc], cfg.encoder.max_len).length);
  }
  for (int q : episode.query) {
    doc_lengths.push_back(flatten_tokens(corpus.documents[q], cfg.encoder.max_len).length);
  }

  // Mutable copies double as the finite-difference evaluation point.
  ParamSet<S> p = params;
  std::vector<Matrix<S>> xi;
  for (long l : doc_lengths) xi.push_back(Matrix<S>::Zero(l, cfg.encoder.d));

  auto loss_at = [&]() -> S {
    Tape<S> tape;
    tape.grad_enabled = false;
    BoundParams<S> bound = bind_params(tape, p);
    std::vector<Var<S>> xiv;
    for (const Matrix<S>& x : xi) xiv.push_back(tape.leaf(x, true, "xi"));
    EpisodeGraph<S> graph =
        build_episode_graph(tape, bound, cfg, corpus, episode, vocab, seed, &xiv);
    return episode_loss(tape, graph, cfg).value()(0, 0);
  };

  // One analytic pass, taken at the same point.
  GradMap<S> analytic;
  std::vector<Matrix<S>> analytic_xi;
  {
    Tape<S> tape;
    BoundParams<S> bound = bind_params(tape, p);
    std::vector<Var<S>> xiv;
    for (const Matrix<S>& x : xi) xiv.push_back(tape.leaf(x, true, "xi"));
    EpisodeGraph<S> graph =
        build_episode_graph(tape, bound, cfg, corpus, episode, vocab, seed, &xiv);
    tape.backward(episode_loss(tape, graph, cfg));
    analytic = collect_grads(bound);
    for (const Var<S>& v : xiv) analytic_xi.push_back(v.grad());
  }

  std::vector<GradCheckRow> rows;
  for (const std::string& name : p.names()) {
    Matrix<S> fd = fd_grad<S>(p.at(name), loss_at, h);
    rows.push_back({name, static_cast<double>(max_rel_err<S>(analytic.at(name), fd))});
  }
  for (std::size_t i = 0; i < xi.size(); ++i) {
    Matrix<S> fd = fd_grad<S>(xi[i], loss_at, h);
    rows.push_back({"xi[" + std::to_string(i) + "]",
                    static_cast<double>(max_rel_err<S>(analytic_xi[i], fd))});
  }
  return rows;
}

}  // namespace fsre
