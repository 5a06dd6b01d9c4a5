#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "fsre/metrics.hpp"
#include "fsre/types.hpp"

using namespace fsre;

namespace {

// Independent counting oracle: naive loops over deduplicated fact lists.
struct OracleRow {
  long tp = 0, fp = 0, fn = 0;
};

std::pair<double, double> oracle(std::vector<ScoredFact> golds, std::vector<ScoredFact> preds) {
  std::sort(golds.begin(), golds.end());
  golds.erase(std::unique(golds.begin(), golds.end()), golds.end());
  std::sort(preds.begin(), preds.end());
  preds.erase(std::unique(preds.begin(), preds.end()), preds.end());

  std::set<std::string> relations;
  for (const auto& f : golds) relations.insert(f.relation);
  for (const auto& f : preds) relations.insert(f.relation);

  auto f1 = [](long tp, long fp, long fn) {
    const double p = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    const double r = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  };

  double macro = 0.0;
  long active = 0, tp_all = 0, fp_all = 0, fn_all = 0;
  for (const std::string& rel : relations) {
    OracleRow row;
    for (const auto& g : golds) {
      if (g.relation != rel) continue;
      bool hit = false;
      for (const auto& p : preds) {
        if (p == g) hit = true;
      }
      hit ? row.tp++ : row.fn++;
    }
    for (const auto& p : preds) {
      if (p.relation != rel) continue;
      bool hit = false;
      for (const auto& g : golds) {
        if (g == p) hit = true;
      }
      if (!hit) row.fp++;
    }
    if (row.tp + row.fp + row.fn == 0) continue;
    macro += f1(row.tp, row.fp, row.fn);
    active += 1;
    tp_all += row.tp;
    fp_all += row.fp;
    fn_all += row.fn;
  }
  return {active > 0 ? macro / double(active) : 0.0, f1(tp_all, fp_all, fn_all)};
}

std::vector<ScoredFact> random_facts(Rng& rng, int n) {
  std::vector<ScoredFact> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(2)),
                   static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4)),
                   "R" + std::to_string(rng.below(3))});
  }
  return out;
}

}  // namespace

TEST_CASE("perfect predictions score 1.0 on both metrics") {
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "born_in"}, {0, 1, 2, 3, "works_at"}};
  F1Report r = aggregate(golds, golds);
  CHECK(r.macro_f1 == doctest::Approx(1.0));
  CHECK(r.micro_f1 == doctest::Approx(1.0));
  CHECK(r.episodes == 1);
  CHECK(r.per_relation.at("born_in").tp == 1);
  CHECK(r.per_relation.at("born_in").fp == 0);
}

TEST_CASE("one relation with TP=1 FP=1 FN=0") {
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "r"}};
  std::vector<ScoredFact> preds{{0, 0, 0, 1, "r"}, {0, 0, 2, 3, "r"}};
  F1Report r = aggregate(golds, preds);
  CHECK(r.per_relation.at("r").precision == doctest::Approx(0.5));
  CHECK(r.per_relation.at("r").recall == doctest::Approx(1.0));
  CHECK(r.per_relation.at("r").f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("macro averages per-relation F1; micro pools the counts") {
  // "a": 2 gold, both predicted, no spurious -> F1 1. "b": 2 gold, none
  // predicted, 0 spurious... use 1 wrong prediction so b stays active.
  std::vector<ScoredFact> golds{
      {0, 0, 0, 1, "a"}, {0, 0, 1, 2, "a"}, {0, 0, 2, 3, "b"}, {0, 0, 3, 0, "b"}};
  std::vector<ScoredFact> preds{{0, 0, 0, 1, "a"}, {0, 0, 1, 2, "a"}, {0, 0, 1, 3, "b"}};
  F1Report r = aggregate(golds, preds);
  CHECK(r.per_relation.at("a").f1 == doctest::Approx(1.0));
  CHECK(r.per_relation.at("b").f1 == doctest::Approx(0.0));
  CHECK(r.macro_f1 == doctest::Approx(0.5));
  // pooled: tp 2, fp 1, fn 2 -> P 2/3, R 1/2, F1 = 2*(1/3)/(7/6) = 4/7
  CHECK(r.micro_f1 == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("inactive relation types never enter the macro average") {
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "a"}};
  std::vector<ScoredFact> preds{{0, 0, 0, 1, "a"}};
  F1Report r = aggregate(golds, preds, {"a", "b", "c"});
  CHECK(r.macro_f1 == doctest::Approx(1.0));
  CHECK(r.per_relation.count("b") == 0);
}

TEST_CASE("empty inputs give an empty zero report") {
  F1Report r = aggregate({}, {});
  CHECK(r.macro_f1 == 0.0);
  CHECK(r.micro_f1 == 0.0);
  CHECK(r.episodes == 0);
  CHECK(r.per_relation.empty());
}

TEST_CASE("duplicates collapse under set semantics") {
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "r"}, {0, 0, 0, 1, "r"}};
  std::vector<ScoredFact> preds{{0, 0, 0, 1, "r"}, {0, 0, 0, 1, "r"}, {0, 0, 0, 1, "r"}};
  F1Report r = aggregate(golds, preds);
  CHECK(r.per_relation.at("r").tp == 1);
  CHECK(r.per_relation.at("r").fp == 0);
  CHECK(r.macro_f1 == doctest::Approx(1.0));
}

TEST_CASE("NOTA and out-of-universe labels are data errors") {
  std::vector<ScoredFact> nota{{0, 0, 0, 1, ""}};
  CHECK_THROWS_AS(aggregate(nota, {}), Error);
  std::vector<ScoredFact> facts{{0, 0, 0, 1, "x"}};
  CHECK_THROWS_AS(aggregate(facts, {}, {"a", "b"}), Error);
}

TEST_CASE("matches the brute-force oracle on randomized cases") {
  Rng rng(2026);
  for (int t = 0; t < 300; ++t) {
    auto golds = random_facts(rng, static_cast<int>(rng.below(10)));
    auto preds = random_facts(rng, static_cast<int>(rng.below(10)));
    const auto [macro, micro] = oracle(golds, preds);
    F1Report r = aggregate(golds, preds);
    CHECK(r.macro_f1 == macro);
    CHECK(r.micro_f1 == micro);
  }
}

TEST_CASE("scaling one relation's counts leaves its F1 and the macro unchanged") {
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "a"}, {0, 0, 1, 2, "a"}, {0, 0, 2, 3, "b"}};
  std::vector<ScoredFact> preds{{0, 0, 0, 1, "a"}, {0, 0, 3, 2, "a"}, {0, 0, 2, 3, "b"}};
  const F1Report base = aggregate(golds, preds);
  // Clone relation-a facts into fresh episodes: every count for "a" scales by 4.
  for (int copy = 1; copy <= 3; ++copy) {
    for (const auto& f : std::vector<ScoredFact>(golds.begin(), golds.end())) {
      if (f.relation == "a") golds.push_back({f.episode + 10 * copy, f.doc, f.head, f.tail, "a"});
    }
    for (const auto& f : std::vector<ScoredFact>(preds.begin(), preds.end())) {
      if (f.relation == "a") preds.push_back({f.episode + 10 * copy, f.doc, f.head, f.tail, "a"});
    }
  }
  const F1Report scaled = aggregate(golds, preds);
  CHECK(scaled.per_relation.at("a").f1 == doctest::Approx(base.per_relation.at("a").f1));
  CHECK(scaled.macro_f1 == doctest::Approx(base.macro_f1));
}

TEST_CASE("micro-F1 ignores how facts are spread over episodes") {
  Rng rng(7);
  auto golds = random_facts(rng, 12);
  auto preds = random_facts(rng, 12);
  const F1Report base = aggregate(golds, preds);
  // Relabel episode ids with a fixed permutation applied to gold and pred alike.
  auto permute = [](std::vector<ScoredFact> v) {
    for (auto& f : v) f.episode = (f.episode * 2 + 1) % 5;
    return v;
  };
  const F1Report moved = aggregate(permute(golds), permute(preds));
  CHECK(moved.micro_f1 == doctest::Approx(base.micro_f1));
  CHECK(moved.macro_f1 == doctest::Approx(base.macro_f1));
}

TEST_CASE("per-episode mode averages episode scores") {
  // Episode 0 perfect, episode 1 entirely wrong.
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "r"}, {1, 0, 0, 1, "r"}};
  std::vector<ScoredFact> preds{{0, 0, 0, 1, "r"}, {1, 0, 2, 3, "r"}};
  F1Report pooled = aggregate(golds, preds);
  F1Report per = aggregate(golds, preds, {}, AggregationMode::kPerEpisode);
  CHECK(per.macro_f1 == doctest::Approx(0.5));
  CHECK(per.micro_f1 == doctest::Approx(0.5));
  // pooled: tp 1, fp 1, fn 1 -> F1 = 0.5 as well here, but counts differ
  CHECK(pooled.per_relation.at("r").tp == 1);
  CHECK(per.episodes == 2);
}

TEST_CASE("report serializes to JSON with both aggregates") {
  std::vector<ScoredFact> golds{{0, 0, 0, 1, "r"}};
  F1Report r = aggregate(golds, golds);
  const std::string j = r.to_json();
  CHECK(j.find("\"macro_f1\": 1.0") != std::string::npos);
  CHECK(j.find("\"per_relation\"") != std::string::npos);
}
