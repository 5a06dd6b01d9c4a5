#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fsre/episode.hpp"
#include "fsre/model.hpp"
#include "fsre/vocab.hpp"

namespace fixtures {

// Hand-sized corpus: six short documents over three relations, every flat
// length well under 32 tokens so finite-difference sweeps stay cheap.
inline fsre::Corpus tiny_corpus() {
  using fsre::Document;
  auto doc = [](std::string id, std::vector<std::vector<std::string>> sents,
                std::vector<std::vector<fsre::Mention>> entities,
                std::vector<fsre::RelationFact> facts) {
    Document d;
    d.doc_id = std::move(id);
    d.sentences = std::move(sents);
    for (auto& ms : entities) d.entities.push_back({std::move(ms)});
    d.facts = std::move(facts);
    return d;
  };

  fsre::Corpus c;
  c.relation_inventory = {"r0", "r1", "r2"};
  c.documents.push_back(doc(
      "d0", {{"alice", "visits", "bob", "today"}, {"alice", "waves", "back"}},
      {{{0, 0, 1, "alice"}, {1, 0, 1, "alice"}}, {{0, 2, 3, "bob"}}, {{1, 1, 2, "waves"}}},
      {{0, "r0", 1}}));
  c.documents.push_back(doc(
      "d1", {{"carol", "pays", "dan", "fast"}, {"dan", "thanks", "carol", "warmly"}},
      {{{0, 0, 1, "carol"}, {1, 2, 3, "carol"}}, {{0, 2, 3, "dan"}, {1, 0, 1, "dan"}},
       {{1, 1, 2, "thanks"}}},
      {{0, "r0", 1}, {1, "r1", 2}}));
  c.documents.push_back(doc(
      "d2", {{"erin", "meets", "frank", "here"}, {"frank", "nods", "politely"}},
      {{{0, 0, 1, "erin"}}, {{0, 2, 3, "frank"}, {1, 0, 1, "frank"}}, {{1, 1, 2, "nods"}}},
      {{0, "r1", 1}}));
  c.documents.push_back(doc(
      "d3", {{"gail", "hires", "hank", "monday"}, {"gail", "trains", "ivan", "hard"}},
      {{{0, 0, 1, "gail"}, {1, 0, 1, "gail"}}, {{0, 2, 3, "hank"}}, {{1, 2, 3, "ivan"}}},
      {{0, "r2", 1}, {0, "r0", 2}}));
  c.documents.push_back(doc(
      "d4", {{"jack", "calls", "kate", "twice"}, {"kate", "answers", "jack", "late"}},
      {{{0, 0, 1, "jack"}, {1, 2, 3, "jack"}}, {{0, 2, 3, "kate"}, {1, 0, 1, "kate"}},
       {{1, 1, 2, "answers"}}},
      {{1, "r2", 0}}));
  c.documents.push_back(doc(
      "d5", {{"lena", "mails", "marc", "often"}, {"marc", "reads", "slowly"}},
      {{{0, 0, 1, "lena"}}, {{0, 2, 3, "marc"}, {1, 0, 1, "marc"}}, {{1, 1, 2, "reads"}}},
      {{0, "r1", 2}}));
  fsre::validate_corpus(c, 64);
  return c;
}

// Support view restricted to `relations`; relations are stored sorted to
// match the sampler's convention.
inline fsre::Episode make_episode(const fsre::Corpus& corpus, std::vector<int> support,
                                  std::vector<int> query, std::vector<std::string> relations,
                                  fsre::TaskSetting setting = {}) {
  std::sort(relations.begin(), relations.end());
  fsre::Episode e;
  e.setting = setting.name.empty()
                  ? fsre::TaskSetting{"custom", static_cast<int>(support.size()),
                                      static_cast<int>(query.size())}
                  : setting;
  for (int s : support) {
    fsre::SupportDoc sd;
    sd.doc = s;
    for (const auto& f : corpus.documents[s].facts) {
      if (std::find(relations.begin(), relations.end(), f.relation) != relations.end()) {
        sd.facts.push_back(f);
      }
    }
    e.support.push_back(std::move(sd));
  }
  e.query = std::move(query);
  e.relations = std::move(relations);
  return e;
}

inline fsre::ModelConfig tiny_model_config(int vocab_size, int d = 8, int heads = 2,
                                           int layers = 1) {
  fsre::ModelConfig cfg;
  cfg.encoder.vocab_size = vocab_size;
  cfg.encoder.d = d;
  cfg.encoder.heads = heads;
  cfg.encoder.layers = layers;
  cfg.encoder.max_len = 64;
  cfg.encoder.ffn_dim = 2 * d;
  cfg.omega = 4;
  cfg.beta = 4;
  cfg.cap_per_doc = 8;
  cfg.degenerate = fsre::DegeneratePolicy::kError;
  return cfg;
}

}  // namespace fixtures
