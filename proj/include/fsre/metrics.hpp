#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "fsre/types.hpp"

namespace fsre {

// One labeled triple located by (episode, query slot, head, tail). Gold and
// predicted facts share this shape; matching is exact set equality.
struct ScoredFact {
  int episode = 0;
  int doc = 0;
  int head = 0;
  int tail = 0;
  std::string relation;

  friend auto operator<=>(const ScoredFact&, const ScoredFact&) = default;
};

struct RelationCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Pooled: counts accumulated per relation across all episodes, then scored.
// PerEpisode: each episode scored on its own pooled counts, then the episode
// scores are averaged unweighted.
enum class AggregationMode { kPooled, kPerEpisode };

struct F1Report {
  std::map<std::string, RelationCounts> per_relation;  // pooled counts; no NOTA row
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  int episodes = 0;

  std::string to_json() const;
};

// Exact-set scoring. Duplicate facts collapse. Relation types with no gold
// and no predicted instances never enter the macro average; `universe`, when
// nonempty, bounds the admissible relation labels (a label outside it is a
// data error). The NOTA label (empty string) is never scored.
F1Report aggregate(const std::vector<ScoredFact>& golds, const std::vector<ScoredFact>& preds,
                   const std::vector<std::string>& universe = {},
                   AggregationMode mode = AggregationMode::kPooled);

}  // namespace fsre
