#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "fsre/calib.hpp"
#include "fsre/corpus.hpp"
#include "fsre/encoder.hpp"
#include "fsre/episode.hpp"
#include "fsre/hybrid.hpp"
#include "fsre/metrics.hpp"
#include "fsre/nota.hpp"
#include "fsre/vocab.hpp"

namespace fsre {

// Everything that fixes the model's shape and the episode graph's wiring.
// The three use_* switches carve out the ablations: pair encoding falls back
// to pooled entity embeddings, the NOTA prototype falls back to one global
// learnable vector, and the focal weight falls back to uniform.
struct ModelConfig {
  EncoderConfig encoder;
  int omega = 10;      // support instances kept per relation prototype
  int beta = 10;       // support NOTA instances fed to the prototype learner
  double alpha = 1.0;  // focal exponent on positive log-likelihood terms
  int tpl_hidden = 0;  // prototype-learner hidden width; 0 means 2*d
  int cap_per_doc = 64;
  bool use_he = true;
  bool use_tpl = true;
  bool use_dwc = true;
  bool positives_from_model = false;
  PoolMode pool = PoolMode::kToken;
  DegeneratePolicy degenerate = DegeneratePolicy::kUniform;

  int pair_width() const { return 2 * encoder.d; }
  int learner_hidden() const { return tpl_hidden > 0 ? tpl_hidden : 2 * encoder.d; }

  void validate() const {
    encoder.validate();
    if (omega <= 0 || beta <= 0 || cap_per_doc <= 0) {
      throw_config("omega, beta, and cap_per_doc must be positive");
    }
    if (alpha < 0.0) throw_config("focal exponent must be nonnegative");
    if (tpl_hidden < 0) throw_config("tpl_hidden must be nonnegative");
  }
};

// JSON round-trip for checkpoint sidecars; unknown keys are a config error.
std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

PoolMode pool_from_name(const std::string& name);
DegeneratePolicy degenerate_from_name(const std::string& name);

// All parameter groups exist regardless of the ablation switches, so
// checkpoints stay shape-compatible when a switch flips.
template <typename S>
ParamSet<S> init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamSet<S> params = init_encoder<S>(cfg.encoder, seed);
  Rng rng(hash_combine(seed, hash_str("model-init")));
  init_fusion(params, cfg.encoder.d, rng);
  init_proto_learner(params, cfg.pair_width(), cfg.learner_hidden(), rng);
  init_nota_global(params, cfg.pair_width(), rng);
  return params;
}

// One encoded document plus per-entity pooled embeddings and attention
// profiles, shared by every pair drawn from the document.
template <typename S>
struct DocEncoding {
  EncoderOutput<S> out;
  std::vector<Var<S>> embed;  // per entity, 1 x d
  std::vector<Var<S>> attn;   // per entity, heads x l; empty when use_he is off
};

template <typename S>
DocEncoding<S> encode_document(Tape<S>& tape, const BoundParams<S>& bound, const ModelConfig& cfg,
                               const Document& doc, const Vocab& vocab, Var<S> perturbation = {}) {
  const FlatDocument flat = flatten_tokens(doc, cfg.encoder.max_len);
  DocEncoding<S> enc;
  enc.out = encode(tape, bound, cfg.encoder, vocab.encode(flat.tokens), perturbation);
  for (const auto& spans : flat.global_spans) {
    enc.embed.push_back(entity_embedding(enc.out, spans, cfg.pool));
    if (cfg.use_he) enc.attn.push_back(entity_attention(enc.out, spans, cfg.pool));
  }
  return enc;
}

// 1 x 2d representation of one ordered entity pair.
template <typename S>
Var<S> pair_instance(const DocEncoding<S>& enc, int head, int tail, const BoundParams<S>& bound,
                     const ModelConfig& cfg) {
  const int n = static_cast<int>(enc.embed.size());
  if (head < 0 || head >= n || tail < 0 || tail >= n || head == tail) {
    throw_internal("pair_instance: bad entity pair " + std::to_string(head) + "," +
                   std::to_string(tail));
  }
  if (!cfg.use_he) return concat_cols<S>({enc.embed[head], enc.embed[tail]});
  Var<S> context = local_context(
      enc.out, localized_attention(enc.attn[head], enc.attn[tail]), cfg.degenerate);
  Var<S> z_s = fuse(enc.embed[head], context, bound.at("fuse.subj.w"), bound.at("fuse.subj.b"));
  Var<S> z_o = fuse(enc.embed[tail], context, bound.at("fuse.obj.w"), bound.at("fuse.obj.b"));
  return concat_cols<S>({z_s, z_o});
}

// One query pair with its gold relation indices and live logits.
template <typename S>
struct ScoredPair {
  int query_slot = 0;
  int head = 0;
  int tail = 0;
  std::vector<int> gold;  // indices into the episode relation list; empty = NOTA
  PairLogits<S> logits;
};

template <typename S>
struct EpisodeGraph {
  std::vector<ScoredPair<S>> pairs;
  std::vector<Var<S>> prototypes;  // stacked k x 2d per relation, episode order
  Var<S> nota_prototype;           // beta x 2d learned, or the 1 x 2d global vector
};

// Assembles the full episode graph on one tape. `perturbations`, when given,
// holds one l x d variable per document in support-then-query order (a default
// Var skips that document). The seed drives every in-episode subsample; it
// must stay fixed across repeated builds of the same episode so the loss
// surface does not move under adversarial steps.
template <typename S>
EpisodeGraph<S> build_episode_graph(Tape<S>& tape, const BoundParams<S>& bound,
                                    const ModelConfig& cfg, const Corpus& corpus,
                                    const Episode& episode, const Vocab& vocab,
                                    std::uint64_t seed,
                                    const std::vector<Var<S>>* perturbations = nullptr) {
  cfg.validate();
  const std::size_t n_docs = episode.support.size() + episode.query.size();
  if (perturbations && perturbations->size() != n_docs) {
    throw_internal("expected one perturbation slot per document, got " +
                   std::to_string(perturbations->size()) + " for " + std::to_string(n_docs));
  }
  auto xi_for = [&](std::size_t doc_index) {
    return perturbations ? (*perturbations)[doc_index] : Var<S>{};
  };

  std::vector<DocEncoding<S>> sup;
  for (std::size_t i = 0; i < episode.support.size(); ++i) {
    sup.push_back(encode_document(tape, bound, cfg,
                                  corpus.documents[episode.support[i].doc], vocab, xi_for(i)));
  }

  // Each distinct support pair is represented once even when it carries
  // several labels or feeds both a prototype and the NOTA pool.
  std::map<std::tuple<int, int, int>, Var<S>> sup_cache;
  auto support_instance = [&](int slot, int head, int tail) {
    auto key = std::make_tuple(slot, head, tail);
    auto it = sup_cache.find(key);
    if (it == sup_cache.end()) {
      it = sup_cache.emplace(key, pair_instance(sup[slot], head, tail, bound, cfg)).first;
    }
    return it->second;
  };

  std::map<std::string, std::vector<Var<S>>> by_relation;
  for (const CandidatePair& p : support_pairs(corpus, episode)) {
    if (!p.is_nota()) by_relation[p.label].push_back(support_instance(p.doc, p.head, p.tail));
  }

  EpisodeGraph<S> graph;
  for (const std::string& r : episode.relations) {
    Prototype<S> proto = relation_prototype(by_relation[r], r, cfg.omega, seed);
    graph.prototypes.push_back(concat_rows(proto.vectors));
  }

  if (cfg.use_tpl) {
    const std::vector<CandidatePair> pool = nota_pool(corpus, episode, cfg.cap_per_doc, seed);
    std::vector<Var<S>> rows;
    for (std::size_t i : select_nota_indices(pool.size(), cfg.beta, seed)) {
      rows.push_back(support_instance(pool[i].doc, pool[i].head, pool[i].tail));
    }
    graph.nota_prototype = nota_prototype(concat_rows(rows), bound);
  } else {
    graph.nota_prototype = bound.at("nota.global");
  }

  std::vector<DocEncoding<S>> qenc;
  for (std::size_t j = 0; j < episode.query.size(); ++j) {
    qenc.push_back(encode_document(tape, bound, cfg, corpus.documents[episode.query[j]], vocab,
                                   xi_for(episode.support.size() + j)));
  }

  std::map<std::string, int> relation_index;
  for (std::size_t i = 0; i < episode.relations.size(); ++i) {
    relation_index[episode.relations[i]] = static_cast<int>(i);
  }
  // Fold the per-label candidate rows into one entry per ordered pair.
  std::map<std::tuple<int, int, int>, std::vector<int>> golds;
  for (const CandidatePair& p : query_pairs(corpus, episode)) {
    auto& g = golds[std::make_tuple(p.doc, p.head, p.tail)];
    if (!p.is_nota()) g.push_back(relation_index.at(p.label));
  }

  for (const auto& [key, gold] : golds) {
    ScoredPair<S> sp;
    std::tie(sp.query_slot, sp.head, sp.tail) = key;
    sp.gold = gold;
    Var<S> q = pair_instance(qenc[sp.query_slot], sp.head, sp.tail, bound, cfg);
    for (const Var<S>& proto : graph.prototypes) {
      sp.logits.relations.push_back(relation_logit(q, proto));
    }
    sp.logits.nota = relation_logit(q, graph.nota_prototype);
    graph.pairs.push_back(std::move(sp));
  }
  return graph;
}

// Mean pair loss over every ordered query pair of the episode.
template <typename S>
Var<S> episode_loss(Tape<S>& tape, const EpisodeGraph<S>& graph, const ModelConfig& cfg) {
  if (graph.pairs.empty()) throw_internal("episode graph holds no query pairs");
  const S alpha = cfg.use_dwc ? static_cast<S>(cfg.alpha) : S(0);
  Var<S> total = tape.constant(Matrix<S>::Zero(1, 1));
  for (const ScoredPair<S>& sp : graph.pairs) {
    total = add(total, pair_loss_graph(sp.logits, sp.gold, alpha, cfg.positives_from_model));
  }
  return affine(total, S(1) / static_cast<S>(graph.pairs.size()), S(0));
}

template <typename S>
struct EpisodeLossResult {
  S loss = S(0);
  GradMap<S> grads;
  long pair_count = 0;
};

// Clean (non-adversarial) training forward/backward for one episode.
template <typename S>
EpisodeLossResult<S> episode_grads(const ParamSet<S>& params, const ModelConfig& cfg,
                                   const Corpus& corpus, const Episode& episode,
                                   const Vocab& vocab, std::uint64_t seed) {
  Tape<S> tape;
  BoundParams<S> bound = bind_params(tape, params);
  EpisodeGraph<S> graph = build_episode_graph(tape, bound, cfg, corpus, episode, vocab, seed);
  Var<S> loss = episode_loss(tape, graph, cfg);
  tape.backward(loss);
  return {loss.value()(0, 0), collect_grads(bound), static_cast<long>(graph.pairs.size())};
}

// Inference-side view of one query pair: plain logit values, the decision,
// and the gold indices it will be scored against.
struct PairPrediction {
  int query_slot = 0;
  int head = 0;
  int tail = 0;
  std::vector<int> gold;
  PairScores scores;
  std::vector<int> predicted;
};

// Scores every ordered query pair with gradients disabled.
template <typename S>
std::vector<PairPrediction> score_episode(const ParamSet<S>& params, const ModelConfig& cfg,
                                          const Corpus& corpus, const Episode& episode,
                                          const Vocab& vocab, std::uint64_t seed) {
  Tape<S> tape;
  tape.grad_enabled = false;
  BoundParams<S> bound = bind_params(tape, params);
  EpisodeGraph<S> graph = build_episode_graph(tape, bound, cfg, corpus, episode, vocab, seed);
  std::vector<PairPrediction> out;
  for (const ScoredPair<S>& sp : graph.pairs) {
    PairPrediction p;
    p.query_slot = sp.query_slot;
    p.head = sp.head;
    p.tail = sp.tail;
    p.gold = sp.gold;
    for (const Var<S>& l : sp.logits.relations) {
      p.scores.relation_logits.push_back(static_cast<double>(l.value()(0, 0)));
    }
    p.scores.nota_logit = static_cast<double>(sp.logits.nota.value()(0, 0));
    p.predicted = predict(p.scores);
    out.push_back(std::move(p));
  }
  return out;
}

// Expands scored pairs into gold/predicted fact rows for the F1 harness.
inline void collect_facts(const std::vector<PairPrediction>& pairs, const Episode& episode,
                          int episode_id, std::vector<ScoredFact>& golds,
                          std::vector<ScoredFact>& preds) {
  for (const PairPrediction& p : pairs) {
    for (int g : p.gold) {
      golds.push_back({episode_id, p.query_slot, p.head, p.tail, episode.relations[g]});
    }
    for (int r : p.predicted) {
      preds.push_back({episode_id, p.query_slot, p.head, p.tail, episode.relations[r]});
    }
  }
}

}  // namespace fsre
