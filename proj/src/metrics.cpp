#include "fsre/metrics.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace fsre {

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(long tp, long fp, long fn) {
  const double p = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  const double r = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  return safe_div(2.0 * p * r, p + r);
}

void finish(RelationCounts& c) {
  c.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  c.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  c.f1 = safe_div(2.0 * c.precision * c.recall, c.precision + c.recall);
}

// Per-relation counts over one gold/pred set pair.
std::map<std::string, RelationCounts> count(const std::set<ScoredFact>& gold,
                                            const std::set<ScoredFact>& pred) {
  std::map<std::string, RelationCounts> rows;
  for (const ScoredFact& g : gold) {
    if (pred.count(g)) {
      rows[g.relation].tp += 1;
    } else {
      rows[g.relation].fn += 1;
    }
  }
  for (const ScoredFact& p : pred) {
    if (!gold.count(p)) rows[p.relation].fp += 1;
  }
  return rows;
}

// Macro/micro over relation types carrying at least one count.
std::pair<double, double> summarize(const std::map<std::string, RelationCounts>& rows) {
  double macro_sum = 0.0;
  long active = 0;
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [relation, c] : rows) {
    if (c.tp + c.fp + c.fn == 0) continue;
    macro_sum += f1_of(c.tp, c.fp, c.fn);
    active += 1;
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  return {safe_div(macro_sum, static_cast<double>(active)), f1_of(tp, fp, fn)};
}

void check_labels(const std::vector<ScoredFact>& facts, const std::set<std::string>& universe,
                  const char* what) {
  for (const ScoredFact& f : facts) {
    if (f.relation.empty()) throw_data(std::string(what) + ": NOTA is never a scored relation");
    if (!universe.empty() && !universe.count(f.relation)) {
      throw_data(std::string(what) + ": relation '" + f.relation + "' outside the universe");
    }
  }
}

}  // namespace

F1Report aggregate(const std::vector<ScoredFact>& golds, const std::vector<ScoredFact>& preds,
                   const std::vector<std::string>& universe, AggregationMode mode) {
  const std::set<std::string> allowed(universe.begin(), universe.end());
  check_labels(golds, allowed, "gold");
  check_labels(preds, allowed, "prediction");

  const std::set<ScoredFact> gold(golds.begin(), golds.end());
  const std::set<ScoredFact> pred(preds.begin(), preds.end());

  F1Report report;
  report.per_relation = count(gold, pred);
  for (auto& [relation, c] : report.per_relation) finish(c);

  std::set<int> episode_ids;
  for (const ScoredFact& f : gold) episode_ids.insert(f.episode);
  for (const ScoredFact& f : pred) episode_ids.insert(f.episode);
  report.episodes = static_cast<int>(episode_ids.size());

  if (mode == AggregationMode::kPooled) {
    std::tie(report.macro_f1, report.micro_f1) = summarize(report.per_relation);
    return report;
  }

  // Per-episode: score each episode in isolation, then average unweighted.
  double macro_sum = 0.0, micro_sum = 0.0;
  for (int id : episode_ids) {
    std::set<ScoredFact> g, p;
    for (const ScoredFact& f : gold) {
      if (f.episode == id) g.insert(f);
    }
    for (const ScoredFact& f : pred) {
      if (f.episode == id) p.insert(f);
    }
    const auto [macro, micro] = summarize(count(g, p));
    macro_sum += macro;
    micro_sum += micro;
  }
  if (!episode_ids.empty()) {
    report.macro_f1 = macro_sum / static_cast<double>(episode_ids.size());
    report.micro_f1 = micro_sum / static_cast<double>(episode_ids.size());
  }
  return report;
}

std::string F1Report::to_json() const {
  nlohmann::ordered_json j;
  j["macro_f1"] = macro_f1;
  j["micro_f1"] = micro_f1;
  j["episodes"] = episodes;
  nlohmann::ordered_json rows = nlohmann::ordered_json::object();
  for (const auto& [relation, c] : per_relation) {
    rows[relation] = {{"tp", c.tp},
                      {"fp", c.fp},
                      {"fn", c.fn},
                      {"precision", c.precision},
                      {"recall", c.recall},
                      {"f1", c.f1}};
  }
  j["per_relation"] = rows;
  return j.dump(1);
}

}  // namespace fsre
