#pragma once

#include <string>
#include <vector>

#include "fsre/corpus.hpp"
#include "fsre/types.hpp"

namespace fsre {

// Episode task shapes: "1doc" pairs one support document with three query
// documents, "3doc" the reverse.
struct TaskSetting {
  std::string name;
  int s_m = 1;
  int q_m = 3;
  bool operator==(const TaskSetting&) const = default;
};

TaskSetting one_doc_setting();
TaskSetting three_doc_setting();
TaskSetting setting_from_name(const std::string& name);

enum class SamplingStrategy { kSingle, kHard };
SamplingStrategy strategy_from_name(const std::string& name);

// Support documents carry the episode's annotation view: facts restricted to
// the episode relation set. Every pair without a fact in this view is NOTA.
struct SupportDoc {
  int doc = 0;  // index into Corpus::documents
  std::vector<RelationFact> facts;
  bool operator==(const SupportDoc&) const = default;
};

struct Episode {
  TaskSetting setting;
  std::vector<SupportDoc> support;
  std::vector<int> query;  // indices into Corpus::documents
  std::vector<std::string> relations;  // sorted episode relation set
  bool operator==(const Episode&) const = default;
};

// One scored unit: an ordered entity pair in one document. Multi-label pairs
// produce one CandidatePair per relation; label.empty() means NOTA.
struct CandidatePair {
  int doc = 0;  // caller-defined slot (support or query position)
  int head = 0;
  int tail = 0;
  std::string label;
  bool is_nota() const { return label.empty(); }
  bool operator==(const CandidatePair&) const = default;
};

struct RelationSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

RelationSplit split_relations(const Corpus& corpus, double train_frac, double dev_frac,
                              double test_frac, std::uint64_t seed);

struct SamplerConfig {
  TaskSetting setting = one_doc_setting();
  SamplingStrategy strategy = SamplingStrategy::kHard;
  int max_retries = 1000;
};

Episode sample_episode(const Corpus& corpus, const std::vector<std::string>& allowed,
                       const SamplerConfig& cfg, Rng& rng);

// All ordered entity pairs of a document, labels restricted to `relations`.
std::vector<CandidatePair> enumerate_pairs(const Document& doc,
                                           const std::vector<std::string>& relations,
                                           int slot = 0);

// Pairs over the episode's support view (slot = support position).
std::vector<CandidatePair> support_pairs(const Corpus& corpus, const Episode& episode);
// Pairs over the query documents (slot = query position), golds restricted to
// the episode relation set.
std::vector<CandidatePair> query_pairs(const Corpus& corpus, const Episode& episode);

// Seeded uniform subsample of NOTA support pairs, at most cap_per_doc kept
// from each support document.
std::vector<CandidatePair> nota_pool(const Corpus& corpus, const Episode& episode,
                                     int cap_per_doc, std::uint64_t seed);

std::string serialize_episode(const Corpus& corpus, const Episode& episode);

}  // namespace fsre
