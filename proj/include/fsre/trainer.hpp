#pragma once

#include <atomic>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsre/metrics.hpp"
#include "fsre/model.hpp"
#include "fsre/vat.hpp"

namespace fsre {

// Linear warmup to base_lr over floor(warmup_frac * total) steps, then linear
// decay to zero at step == total.
inline double lr_at(long step, long total, double warmup_frac, double base_lr) {
  if (total <= 0) throw_config("schedule length must be positive");
  if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) {
    throw_config("warmup fraction must lie in [0, 1)");
  }
  if (step < 0 || step > total) throw_internal("schedule step outside [0, total]");
  const long warmup = static_cast<long>(warmup_frac * static_cast<double>(total));
  if (step < warmup) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  return base_lr *
         (1.0 - static_cast<double>(step - warmup) / static_cast<double>(total - warmup));
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename S>
struct AdamState {
  long step = 0;
  GradMap<S> m;
  GradMap<S> v;
};

// Decoupled-weight-decay adaptive step. Missing gradient entries count as
// zero (the tensor still decays). Any non-finite gradient aborts before any
// state is touched.
template <typename S>
void adamw_step(ParamSet<S>& params, const GradMap<S>& grads, AdamState<S>& state, S lr,
                const AdamConfig& cfg) {
  for (const auto& [name, g] : grads) {
    if (!g.allFinite()) throw_numeric("non-finite gradient for '" + name + "'");
    if (!params.has(name)) throw_internal("gradient for unknown param '" + name + "'");
  }
  state.step += 1;
  const S c1 = S(1) - static_cast<S>(std::pow(cfg.beta1, static_cast<double>(state.step)));
  const S c2 = S(1) - static_cast<S>(std::pow(cfg.beta2, static_cast<double>(state.step)));
  const S b1 = static_cast<S>(cfg.beta1);
  const S b2 = static_cast<S>(cfg.beta2);
  for (const std::string& name : params.names()) {
    Matrix<S>& p = params.at(name);
    auto git = grads.find(name);
    const Matrix<S> g =
        git != grads.end() ? git->second : Matrix<S>::Zero(p.rows(), p.cols());
    if (!state.m.count(name)) {
      state.m[name] = Matrix<S>::Zero(p.rows(), p.cols());
      state.v[name] = Matrix<S>::Zero(p.rows(), p.cols());
    }
    Matrix<S>& m = state.m[name];
    Matrix<S>& v = state.v[name];
    m = b1 * m + (S(1) - b1) * g;
    v = (b2 * v).eval();
    v.array() += (S(1) - b2) * g.array().square();
    const Matrix<S> update =
        ((m.array() / c1) / ((v.array() / c2).sqrt() + static_cast<S>(cfg.eps))).matrix();
    p -= lr * (update + static_cast<S>(cfg.weight_decay) * p);
  }
}

struct TrainConfig {
  ModelConfig model;
  VatConfig vat;
  bool vat_on = false;
  TaskSetting setting = one_doc_setting();
  SamplingStrategy strategy = SamplingStrategy::kHard;
  int max_retries = 1000;
  double base_lr = 2e-6;
  double warmup_frac = 0.06;
  AdamConfig adam;
  double clip_norm = 1.0;
  long episodes = 1000;
  long eval_interval = 250;
  int patience = 8;
  int dev_episodes = 20;
  std::uint64_t seed = 1;
  int error_budget = 10;
  std::string split_mode = "disjoint";  // "shared" reuses every relation for train and dev
  double train_frac = 0.6;
  double dev_frac = 0.2;
  double test_frac = 0.2;
  bool record_episodes = false;  // keep serialized sampled episodes in the result

  void validate() const {
    model.validate();
    if (vat_on) vat.validate();
    if (!(base_lr > 0.0)) throw_config("base learning rate must be positive");
    if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) {
      throw_config("warmup fraction must lie in [0, 1)");
    }
    if (!(clip_norm > 0.0)) throw_config("clip norm must be positive");
    if (episodes < 0) throw_config("episode count must be nonnegative");
    if (eval_interval <= 0) throw_config("eval interval must be positive");
    if (patience <= 0) throw_config("patience must be positive");
    if (dev_episodes < 0) throw_config("dev episode count must be nonnegative");
    if (error_budget < 0) throw_config("error budget must be nonnegative");
    if (split_mode != "disjoint" && split_mode != "shared") {
      throw_config("split mode must be 'disjoint' or 'shared'");
    }
  }
};

struct TrainResult {
  std::string checkpoint_path;
  std::vector<double> loss_trace;  // completed optimizer steps only
  std::vector<std::pair<long, double>> dev_trace;
  std::vector<std::string> episode_log;
  double best_dev_macro = -1.0;
  long best_step = -1;
  long steps = 0;
  int errors = 0;
  bool stopped_early = false;
};

namespace train_detail {

// Deterministic index-space parallel map: output slot i never depends on the
// thread that computed it.
template <typename Fn>
void parallel_for(int jobs, std::size_t n, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  const int width = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  workers.reserve(static_cast<std::size_t>(width));
  for (int w = 0; w < width; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& t : workers) t.join();
}

inline std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace train_detail

// Macro-F1 of one parameter snapshot over a fixed episode list.
template <typename S>
double evaluate_episodes(const ParamSet<S>& params, const ModelConfig& cfg, const Corpus& corpus,
                         const std::vector<Episode>& episodes, const Vocab& vocab,
                         std::uint64_t seed_base, int jobs = 1,
                         AggregationMode mode = AggregationMode::kPooled) {
  std::vector<std::vector<PairPrediction>> scored(episodes.size());
  train_detail::parallel_for(jobs, episodes.size(), [&](std::size_t i) {
    scored[i] = score_episode(params, cfg, corpus, episodes[i], vocab, hash_combine(seed_base, i));
  });
  std::vector<ScoredFact> golds, preds;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    collect_facts(scored[i], episodes[i], static_cast<int>(i), golds, preds);
  }
  return aggregate(golds, preds, {}, mode).macro_f1;
}

// The episodic loop: sample, forward (optionally adversarial), clip, step;
// periodic dev evaluation with early stopping on Macro-F1; best-dev
// checkpointing. Writes train_log.jsonl and vocab.txt under out_dir. A
// vocabulary override lets transfer studies share one token space between a
// training corpus and a shifted evaluation corpus.
template <typename S>
TrainResult train(const Corpus& corpus, const TrainConfig& cfg_in, const std::string& out_dir,
                  int jobs = 1, const Vocab* vocab_override = nullptr) {
  TrainConfig cfg = cfg_in;
  const Vocab vocab = vocab_override ? *vocab_override : build_vocab(corpus);
  cfg.model.encoder.vocab_size = vocab.size();
  cfg.validate();

  std::filesystem::create_directories(out_dir);
  save_vocab_file(vocab, out_dir + "/vocab.txt");
  std::ofstream log(out_dir + "/train_log.jsonl");
  if (!log) throw_data("cannot write training log under '" + out_dir + "'");

  std::vector<std::string> train_relations, dev_relations;
  if (cfg.split_mode == "shared") {
    train_relations = corpus.relation_inventory;
    dev_relations = corpus.relation_inventory;
  } else {
    RelationSplit split =
        split_relations(corpus, cfg.train_frac, cfg.dev_frac, cfg.test_frac, cfg.seed);
    train_relations = split.train;
    dev_relations = split.dev;
  }

  ParamSet<S> params = init_model_params<S>(cfg.model, cfg.seed);
  AdamState<S> adam_state;
  const SamplerConfig sampler{cfg.setting, cfg.strategy, cfg.max_retries};

  std::vector<Episode> dev;
  Rng dev_rng(hash_combine(cfg.seed, hash_str("dev-episodes")));
  for (int i = 0; i < cfg.dev_episodes; ++i) {
    dev.push_back(sample_episode(corpus, dev_relations, sampler, dev_rng));
  }
  const std::uint64_t dev_seed = hash_combine(cfg.seed, hash_str("dev-graph"));

  TrainResult res;
  res.checkpoint_path = out_dir + "/best.ckpt";
  auto save_best = [&](long step, double macro) {
    nlohmann::ordered_json side;
    side["model"] = nlohmann::ordered_json::parse(model_config_to_json(cfg.model));
    side["vocab"] = "vocab.txt";
    side["step"] = step;
    side["dev_macro_f1"] = macro;
    save_checkpoint(params, res.checkpoint_path, side.dump(1));
  };

  if (cfg.episodes == 0) {
    save_best(0, -1.0);
    log << nlohmann::json{{"event", "end"}, {"time", train_detail::timestamp_utc()}}.dump()
        << "\n";
    return res;
  }

  Rng episode_rng(hash_combine(cfg.seed, hash_str("train-episodes")));
  const std::uint64_t graph_seed = hash_combine(cfg.seed, hash_str("train-graph"));
  int stale_evals = 0;
  bool saved_any = false;

  for (long step = 0; step < cfg.episodes; ++step) {
    const double lr = lr_at(step + 1, cfg.episodes, cfg.warmup_frac, cfg.base_lr);
    try {
      Episode episode = sample_episode(corpus, train_relations, sampler, episode_rng);
      if (cfg.record_episodes) res.episode_log.push_back(serialize_episode(corpus, episode));

      S loss;
      GradMap<S> grads;
      if (cfg.vat_on) {
        VatResult<S> vr = freelb_episode(params, cfg.model, corpus, episode, vocab,
                                         hash_combine(graph_seed, step), cfg.vat);
        loss = vr.loss;
        grads = std::move(vr.grads);
      } else {
        EpisodeLossResult<S> er =
            episode_grads(params, cfg.model, corpus, episode, vocab, hash_combine(graph_seed, step));
        loss = er.loss;
        grads = std::move(er.grads);
      }
      const S grad_norm = clip_global_norm(grads, static_cast<S>(cfg.clip_norm));
      adamw_step(params, grads, adam_state, static_cast<S>(lr), cfg.adam);

      res.loss_trace.push_back(static_cast<double>(loss));
      res.steps += 1;
      log << nlohmann::json{{"step", step},
                            {"loss", static_cast<double>(loss)},
                            {"lr", lr},
                            {"grad_norm", static_cast<double>(grad_norm)}}
                 .dump()
          << "\n";
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::kConfig || e.category() == ErrorCategory::kInternal) {
        throw;
      }
      res.errors += 1;
      log_warn("episode " + std::to_string(step) + " skipped: " + e.what());
      log << nlohmann::json{{"step", step}, {"skipped", true}, {"error", e.what()}}.dump()
          << "\n";
      if (res.errors > cfg.error_budget) {
        throw Error(e.category(), "error budget exhausted after " + std::to_string(res.errors) +
                                      " failures; last: " + e.what());
      }
      continue;
    }

    if (!dev.empty() && (step + 1) % cfg.eval_interval == 0) {
      const double macro =
          evaluate_episodes(params, cfg.model, corpus, dev, vocab, dev_seed, jobs);
      res.dev_trace.emplace_back(step, macro);
      log << nlohmann::json{{"step", step}, {"dev_macro_f1", macro}}.dump() << "\n";
      if (macro > res.best_dev_macro) {
        res.best_dev_macro = macro;
        res.best_step = step;
        stale_evals = 0;
        save_best(step, macro);
        saved_any = true;
      } else {
        stale_evals += 1;
        if (stale_evals >= cfg.patience) {
          res.stopped_early = true;
          break;
        }
      }
    }
  }

  if (!saved_any) save_best(res.steps, res.best_dev_macro);
  log << nlohmann::json{{"event", "end"},
                        {"time", train_detail::timestamp_utc()},
                        {"steps", res.steps},
                        {"errors", res.errors},
                        {"stopped_early", res.stopped_early}}
             .dump()
      << "\n";
  return res;
}

}  // namespace fsre
