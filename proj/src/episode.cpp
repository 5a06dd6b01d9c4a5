#include "fsre/episode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

namespace fsre {

TaskSetting one_doc_setting() { return {"1doc", 1, 3}; }
TaskSetting three_doc_setting() { return {"3doc", 3, 1}; }

TaskSetting setting_from_name(const std::string& name) {
  if (name == "1doc") return one_doc_setting();
  if (name == "3doc") return three_doc_setting();
  throw_config("unknown task setting '" + name + "' (expected 1doc or 3doc)");
}

SamplingStrategy strategy_from_name(const std::string& name) {
  if (name == "single") return SamplingStrategy::kSingle;
  if (name == "hard") return SamplingStrategy::kHard;
  throw_config("unknown sampling strategy '" + name + "' (expected single or hard)");
}

RelationSplit split_relations(const Corpus& corpus, double train_frac, double dev_frac,
                              double test_frac, std::uint64_t seed) {
  if (std::abs(train_frac + dev_frac + test_frac - 1.0) > 1e-9) {
    throw_config("relation split fractions must sum to 1");
  }
  if (train_frac < 0 || dev_frac < 0 || test_frac < 0) {
    throw_config("relation split fractions must be nonnegative");
  }
  const auto& inventory = corpus.relation_inventory;
  if (inventory.empty()) throw_config("relation inventory is empty; nothing to split");

  const auto n = static_cast<long>(inventory.size());
  const long n_train = static_cast<long>(std::floor(train_frac * static_cast<double>(n)));
  const long n_dev = static_cast<long>(std::floor(dev_frac * static_cast<double>(n)));
  const long n_test = n - n_train - n_dev;
  if (n_train == 0 || n_dev == 0 || n_test == 0) {
    throw_config("relation split would leave an empty partition (" + std::to_string(n_train) +
                 "," + std::to_string(n_dev) + "," + std::to_string(n_test) + ")");
  }

  std::vector<std::string> pool = inventory;
  Rng rng(hash_combine(seed, hash_str("relation-split")));
  rng.shuffle(pool);

  RelationSplit split;
  split.train.assign(pool.begin(), pool.begin() + n_train);
  split.dev.assign(pool.begin() + n_train, pool.begin() + n_train + n_dev);
  split.test.assign(pool.begin() + n_train + n_dev, pool.end());
  return split;
}

namespace {

std::vector<RelationFact> facts_with(const Document& doc, const std::set<std::string>& keep) {
  std::vector<RelationFact> out;
  for (const RelationFact& fact : doc.facts) {
    if (keep.count(fact.relation)) out.push_back(fact);
  }
  return out;
}

std::vector<int> pick_docs(const std::vector<int>& pool, int k, Rng& rng) {
  std::vector<std::size_t> idx = rng.choose(pool.size(), static_cast<std::size_t>(k));
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace

Episode sample_episode(const Corpus& corpus, const std::vector<std::string>& allowed,
                       const SamplerConfig& cfg, Rng& rng) {
  const int s_m = cfg.setting.s_m;
  const int q_m = cfg.setting.q_m;
  if (static_cast<int>(corpus.documents.size()) < s_m + q_m) {
    throw_data("sampling exhausted: corpus has " + std::to_string(corpus.documents.size()) +
               " documents but the task needs " + std::to_string(s_m + q_m));
  }
  const std::set<std::string> allowed_set(allowed.begin(), allowed.end());
  if (allowed_set.empty()) throw_config("episode sampling needs a nonempty relation set");

  // Documents expressing each allowed relation, in corpus order.
  std::map<std::string, std::vector<int>> docs_with;
  std::vector<int> any_allowed;
  for (int d = 0; d < static_cast<int>(corpus.documents.size()); ++d) {
    bool hit = false;
    std::set<std::string> seen;
    for (const RelationFact& fact : corpus.documents[d].facts) {
      if (!allowed_set.count(fact.relation)) continue;
      hit = true;
      if (seen.insert(fact.relation).second) docs_with[fact.relation].push_back(d);
    }
    if (hit) any_allowed.push_back(d);
  }

  Episode episode;
  episode.setting = cfg.setting;
  std::set<std::string> episode_relations;
  std::vector<int> support_docs;

  if (cfg.strategy == SamplingStrategy::kSingle) {
    std::vector<std::string> feasible;
    for (const std::string& r : allowed) {
      auto it = docs_with.find(r);
      if (it != docs_with.end() && static_cast<int>(it->second.size()) >= s_m) {
        feasible.push_back(r);
      }
    }
    if (feasible.empty()) {
      throw_data("sampling exhausted: no relation is expressed by " + std::to_string(s_m) +
                 " distinct documents");
    }
    const std::string& r = feasible[rng.below(feasible.size())];
    support_docs = pick_docs(docs_with[r], s_m, rng);
    episode_relations = {r};
    // Restrict the support annotation to the sampled relation so that the
    // episode carries exactly one relation type.
    for (int d : support_docs) {
      episode.support.push_back({d, facts_with(corpus.documents[d], {r})});
    }
  } else {
    if (static_cast<int>(any_allowed.size()) < s_m) {
      throw_data("sampling exhausted: only " + std::to_string(any_allowed.size()) +
                 " documents express an allowed relation, need " + std::to_string(s_m));
    }
    int attempts = 0;
    while (true) {
      ++attempts;
      support_docs = pick_docs(any_allowed, s_m, rng);
      episode_relations.clear();
      for (int d : support_docs) {
        for (const RelationFact& fact : corpus.documents[d].facts) {
          if (allowed_set.count(fact.relation)) episode_relations.insert(fact.relation);
        }
      }
      if (episode_relations.size() >= 2 || attempts >= cfg.max_retries) break;
    }
    if (episode_relations.size() < 2) {
      log_warn("hard episode sampling degraded to " +
               std::to_string(episode_relations.size()) + " relation(s) after " +
               std::to_string(attempts) + " attempts");
    }
    for (int d : support_docs) {
      episode.support.push_back({d, facts_with(corpus.documents[d], episode_relations)});
    }
  }

  episode.relations.assign(episode_relations.begin(), episode_relations.end());

  // Query documents: prefer ones expressing an episode relation, then any
  // remaining document.
  const std::set<int> support_set(support_docs.begin(), support_docs.end());
  std::vector<int> preferred;
  std::vector<int> rest;
  for (int d = 0; d < static_cast<int>(corpus.documents.size()); ++d) {
    if (support_set.count(d)) continue;
    bool hit = false;
    for (const RelationFact& fact : corpus.documents[d].facts) {
      if (episode_relations.count(fact.relation)) {
        hit = true;
        break;
      }
    }
    (hit ? preferred : rest).push_back(d);
  }
  if (static_cast<int>(preferred.size()) >= q_m) {
    episode.query = pick_docs(preferred, q_m, rng);
  } else {
    episode.query = preferred;
    const int need = q_m - static_cast<int>(preferred.size());
    if (static_cast<int>(rest.size()) < need) {
      throw_data("sampling exhausted: not enough non-support documents for " +
                 std::to_string(q_m) + " queries");
    }
    for (int d : pick_docs(rest, need, rng)) episode.query.push_back(d);
  }
  return episode;
}

std::vector<CandidatePair> enumerate_pairs(const Document& doc,
                                           const std::vector<std::string>& relations, int slot) {
  const std::set<std::string> keep(relations.begin(), relations.end());
  std::map<std::pair<int, int>, std::set<std::string>> labels;
  for (const RelationFact& fact : doc.facts) {
    if (keep.count(fact.relation)) labels[{fact.head, fact.tail}].insert(fact.relation);
  }
  std::vector<CandidatePair> out;
  const int n = static_cast<int>(doc.entities.size());
  for (int h = 0; h < n; ++h) {
    for (int t = 0; t < n; ++t) {
      if (h == t) continue;
      auto it = labels.find({h, t});
      if (it == labels.end()) {
        out.push_back({slot, h, t, std::string{}});
      } else {
        for (const std::string& r : it->second) out.push_back({slot, h, t, r});
      }
    }
  }
  return out;
}

std::vector<CandidatePair> support_pairs(const Corpus& corpus, const Episode& episode) {
  std::vector<CandidatePair> out;
  for (std::size_t s = 0; s < episode.support.size(); ++s) {
    // The support view may hide facts, so enumerate against the episode's
    // restricted fact list rather than the raw document.
    Document view = corpus.documents[episode.support[s].doc];
    view.facts = episode.support[s].facts;
    auto pairs = enumerate_pairs(view, episode.relations, static_cast<int>(s));
    out.insert(out.end(), pairs.begin(), pairs.end());
  }
  return out;
}

std::vector<CandidatePair> query_pairs(const Corpus& corpus, const Episode& episode) {
  std::vector<CandidatePair> out;
  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    auto pairs = enumerate_pairs(corpus.documents[episode.query[q]], episode.relations,
                                 static_cast<int>(q));
    out.insert(out.end(), pairs.begin(), pairs.end());
  }
  return out;
}

std::vector<CandidatePair> nota_pool(const Corpus& corpus, const Episode& episode,
                                     int cap_per_doc, std::uint64_t seed) {
  if (cap_per_doc <= 0) throw_config("nota pool cap must be positive");
  std::vector<CandidatePair> all = support_pairs(corpus, episode);
  std::vector<std::vector<CandidatePair>> per_doc(episode.support.size());
  for (const CandidatePair& pair : all) {
    if (pair.is_nota()) per_doc[pair.doc].push_back(pair);
  }
  Rng rng(hash_combine(seed, hash_str("nota-pool")));
  std::vector<CandidatePair> pool;
  for (auto& pairs : per_doc) {
    if (static_cast<int>(pairs.size()) <= cap_per_doc) {
      pool.insert(pool.end(), pairs.begin(), pairs.end());
    } else {
      for (std::size_t i : rng.choose(pairs.size(), static_cast<std::size_t>(cap_per_doc))) {
        pool.push_back(pairs[i]);
      }
    }
  }
  if (pool.empty()) {
    throw_data("episode has no NOTA support pairs; cannot build a NOTA pool");
  }
  return pool;
}

std::string serialize_episode(const Corpus& corpus, const Episode& episode) {
  nlohmann::ordered_json out;
  out["setting"] = episode.setting.name;
  out["relations"] = episode.relations;
  auto fact_json = [](const RelationFact& fact) {
    return nlohmann::ordered_json{{"h", fact.head}, {"t", fact.tail}, {"r", fact.relation}};
  };
  out["support"] = nlohmann::ordered_json::array();
  for (const SupportDoc& s : episode.support) {
    nlohmann::ordered_json jdoc;
    jdoc["doc_id"] = corpus.documents[s.doc].doc_id;
    jdoc["facts"] = nlohmann::ordered_json::array();
    for (const RelationFact& fact : s.facts) jdoc["facts"].push_back(fact_json(fact));
    out["support"].push_back(std::move(jdoc));
  }
  out["query"] = nlohmann::ordered_json::array();
  for (int q : episode.query) {
    nlohmann::ordered_json jdoc;
    jdoc["doc_id"] = corpus.documents[q].doc_id;
    jdoc["gold"] = nlohmann::ordered_json::array();
    for (const CandidatePair& pair : enumerate_pairs(corpus.documents[q], episode.relations)) {
      if (!pair.is_nota()) {
        jdoc["gold"].push_back(fact_json({pair.head, pair.label, pair.tail}));
      }
    }
    out["query"].push_back(std::move(jdoc));
  }
  return out.dump(1);
}

}  // namespace fsre
