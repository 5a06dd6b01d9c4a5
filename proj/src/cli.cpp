#include "fsre/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "fsre/corpus.hpp"
#include "fsre/episode.hpp"
#include "fsre/gradcheck.hpp"
#include "fsre/metrics.hpp"
#include "fsre/model.hpp"
#include "fsre/trainer.hpp"
#include "fsre/vat.hpp"
#include "fsre/vocab.hpp"

namespace fsre {

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return kExitConfig;
    case ErrorCategory::kData:
      return kExitData;
    case ErrorCategory::kNumeric:
      return kExitNumeric;
    case ErrorCategory::kInternal:
      return kExitInternal;
  }
  return kExitInternal;
}

namespace {

// One bag for every flag; each subcommand registers the slice it understands.
// Defaults mirror the library config structs so CLI and API agree.
struct Opts {
  std::string corpus_path;
  std::string out_path;
  std::string checkpoint;
  std::string vocab_path;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string precision = "f64";

  GeneratorSpec gen;

  std::string setting = "1doc";
  std::string strategy = "hard";
  int count = 5;
  std::vector<std::string> relations;

  TrainConfig train;
  std::string pool = "token";
  std::string degenerate = "uniform";
  std::string vat = "off";
  std::string init_mode = "zeros";

  std::string metric = "both";
  std::string aggregation = "pooled";
  std::string split = "all";
  std::uint64_t split_seed = 1;

  // Gradient-audit knobs; small by default so a full sweep stays interactive.
  int gc_d = 8;
  int gc_heads = 2;
  int gc_layers = 2;
  int gc_max_len = 48;
  int gc_omega = 4;
  int gc_beta = 4;
  double gc_tol = 1e-4;

  std::string config_file;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// CLI11 reads config files only on the top-level app, so `train` expands its
// flat key=value file into flags before parsing; explicit flags win.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args,
                                            const CLI::App* train_cmd) {
  if (args.empty() || args.front() != "train") return args;
  std::vector<std::string> out;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      files.push_back(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      files.push_back(args[i].substr(9));
    } else {
      out.push_back(args[i]);
    }
  }
  std::map<std::string, std::string> kv;  // later files win
  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) throw_config("cannot open config file '" + file + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string s = trim(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      const auto eq = s.find('=');
      const std::string where = file + ":" + std::to_string(lineno);
      if (eq == std::string::npos) throw_config(where + ": expected key=value");
      const std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty()) throw_config(where + ": empty key");
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      kv[key] = value;
    }
  }
  for (const auto& [key, value] : kv) {
    if (train_cmd->get_option_no_throw("--" + key) == nullptr) {
      throw_config("unknown config key '" + key + "'");
    }
    bool overridden = false;
    for (const std::string& a : out) {
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) {
        overridden = true;
        break;
      }
    }
    if (!overridden) {
      out.push_back("--" + key);
      out.push_back(value);
    }
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write '" + path + "'");
  out << text;
  if (!out) throw_data("failed writing '" + path + "'");
}

AggregationMode aggregation_from_name(const std::string& name) {
  if (name == "pooled") return AggregationMode::kPooled;
  if (name == "per_episode") return AggregationMode::kPerEpisode;
  throw_config("unknown aggregation mode '" + name + "'");
}

bool vat_on_from_name(const std::string& name) {
  if (name == "off") return false;
  if (name == "freelb") return true;
  throw_config("unknown adversarial mode '" + name + "'");
}

// Applies the string-valued enum flags onto the typed config.
TrainConfig resolve_train_config(const Opts& o) {
  TrainConfig cfg = o.train;
  cfg.model.pool = pool_from_name(o.pool);
  cfg.model.degenerate = degenerate_from_name(o.degenerate);
  cfg.setting = setting_from_name(o.setting);
  cfg.strategy = strategy_from_name(o.strategy);
  cfg.vat_on = vat_on_from_name(o.vat);
  cfg.vat.init = vat_init_from_name(o.init_mode);
  cfg.seed = o.seed;
  return cfg;
}

struct ModelBundle {
  ParamSet<double> params;
  ModelConfig config;
  Vocab vocab;
};

// A checkpoint plus its sidecar fully describe the model; the vocabulary file
// named by the sidecar is resolved next to the checkpoint unless overridden.
ModelBundle load_bundle(const std::string& checkpoint, const std::string& vocab_override) {
  const std::string side = load_checkpoint_sidecar(checkpoint);
  if (side.empty()) throw_data("checkpoint sidecar '" + checkpoint + ".json' is missing");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw_data("malformed checkpoint sidecar: " + std::string(e.what()));
  }
  if (!j.contains("model")) throw_data("checkpoint sidecar lacks a 'model' section");
  ModelBundle b{load_checkpoint<double>(checkpoint), model_config_from_json(j["model"].dump()),
                Vocab{}};
  std::string vocab_file = vocab_override;
  if (vocab_file.empty()) {
    const std::string name = j.value("vocab", "vocab.txt");
    vocab_file = (std::filesystem::path(checkpoint).parent_path() / name).string();
  }
  b.vocab = load_vocab_file(vocab_file);
  if (static_cast<int>(b.vocab.size()) != b.config.encoder.vocab_size) {
    throw_data("vocabulary in '" + vocab_file + "' has " + std::to_string(b.vocab.size()) +
               " entries but the checkpoint expects " +
               std::to_string(b.config.encoder.vocab_size));
  }
  return b;
}

void run_gen_corpus(const Opts& o) {
  const Corpus corpus = generate_synthetic_corpus(o.gen, o.seed);
  save_corpus_file(corpus, o.out_path);
  std::cout << "wrote " << o.out_path << ": " << corpus.documents.size() << " documents, "
            << corpus.relation_inventory.size() << " relation types, nota_fraction="
            << nota_pair_fraction(corpus) << "\n";
}

void run_sample(const Opts& o) {
  const Corpus corpus = o.corpus_path.empty() ? generate_synthetic_corpus(GeneratorSpec{}, o.seed)
                                              : load_corpus_file(o.corpus_path);
  const std::vector<std::string>& allowed =
      o.relations.empty() ? corpus.relation_inventory : o.relations;
  const SamplerConfig scfg{setting_from_name(o.setting), strategy_from_name(o.strategy),
                           o.train.max_retries};
  Rng rng(hash_combine(o.seed, hash_str("cli-episodes")));
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (int i = 0; i < o.count; ++i) {
    const Episode ep = sample_episode(corpus, allowed, scfg, rng);
    out.push_back(nlohmann::ordered_json::parse(serialize_episode(corpus, ep)));
  }
  const std::string text = out.dump(1) + "\n";
  if (o.out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(o.out_path, text);
    std::cout << "wrote " << o.count << " episodes to " << o.out_path << "\n";
  }
}

void run_gradcheck(const Opts& o) {
  GeneratorSpec spec;
  spec.documents = 12;
  spec.relation_types = 3;
  spec.vocab_size = 30;
  spec.entities_per_doc = 3;
  spec.nota_fraction = 0.7;
  spec.max_flat_len = o.gc_max_len;
  const Corpus corpus = generate_synthetic_corpus(spec, o.seed);
  const Vocab vocab = build_vocab(corpus);

  ModelConfig cfg;
  cfg.encoder.vocab_size = static_cast<int>(vocab.size());
  cfg.encoder.d = o.gc_d;
  cfg.encoder.heads = o.gc_heads;
  cfg.encoder.layers = o.gc_layers;
  cfg.encoder.max_len = o.gc_max_len;
  cfg.encoder.ffn_dim = 2 * o.gc_d;
  cfg.omega = o.gc_omega;
  cfg.beta = o.gc_beta;
  cfg.cap_per_doc = 8;
  cfg.validate();

  const SamplerConfig scfg{setting_from_name(o.setting), SamplingStrategy::kHard, 1000};
  Rng rng(hash_combine(o.seed, hash_str("cli-episodes")));
  const Episode ep = sample_episode(corpus, corpus.relation_inventory, scfg, rng);

  const ParamSet<double> params = init_model_params<double>(cfg, o.seed);
  const std::vector<GradCheckRow> rows = gradcheck_episode<double>(
      params, cfg, corpus, ep, vocab, hash_combine(o.seed, hash_str("cli-graph")));

  double worst = 0.0;
  for (const GradCheckRow& row : rows) {
    worst = std::max(worst, row.max_rel_err);
    std::cout << std::left << std::setw(16) << row.name << " " << std::scientific
              << std::setprecision(3) << row.max_rel_err << std::defaultfloat << "\n";
  }
  std::cout << "gradcheck over " << rows.size() << " tensors: worst " << std::scientific
            << std::setprecision(3) << worst << std::defaultfloat << " (tolerance " << o.gc_tol
            << ")\n";
  if (!(worst <= o.gc_tol)) {
    throw_numeric("gradient check failed: worst relative error " + std::to_string(worst));
  }
  std::cout << "gradcheck: PASS\n";
}

void run_train(const Opts& o, const std::string& config_snapshot) {
  const Corpus corpus = load_corpus_file(o.corpus_path);
  const TrainConfig cfg = resolve_train_config(o);

  std::filesystem::create_directories(o.out_path);
  nlohmann::ordered_json manifest;
  manifest["command"] = "train";
  manifest["version"] = kCliVersion;
  manifest["started"] = train_detail::timestamp_utc();
  manifest["seed"] = o.seed;
  manifest["precision"] = o.precision;
  manifest["jobs"] = o.jobs;
  manifest["corpus"] = o.corpus_path;
  manifest["out"] = o.out_path;
  manifest["config"] = config_snapshot;
  write_text_file(o.out_path + "/manifest.json", manifest.dump(1) + "\n");

  const TrainResult res = o.precision == "f32" ? train<float>(corpus, cfg, o.out_path, o.jobs)
                                               : train<double>(corpus, cfg, o.out_path, o.jobs);
  std::cout << "trained " << res.steps << " steps (" << res.errors << " skipped episodes)"
            << (res.stopped_early ? ", stopped early" : "") << "\n";
  if (res.best_dev_macro >= 0.0) {
    std::cout << "best dev macro_f1 " << res.best_dev_macro << " at step " << res.best_step
              << "\n";
  }
  std::cout << "checkpoint " << res.checkpoint_path << "\n";
}

void run_eval(const Opts& o) {
  const Corpus corpus = load_corpus_file(o.corpus_path);
  const ModelBundle bundle = load_bundle(o.checkpoint, o.vocab_path);

  std::vector<std::string> allowed;
  if (o.split == "all") {
    allowed = corpus.relation_inventory;
  } else {
    const RelationSplit sp = split_relations(corpus, o.train.train_frac, o.train.dev_frac,
                                             o.train.test_frac, o.split_seed);
    if (o.split == "train") {
      allowed = sp.train;
    } else if (o.split == "dev") {
      allowed = sp.dev;
    } else if (o.split == "test") {
      allowed = sp.test;
    } else {
      throw_config("unknown split '" + o.split + "'");
    }
  }

  const SamplerConfig scfg{setting_from_name(o.setting), strategy_from_name(o.strategy),
                           o.train.max_retries};
  Rng rng(hash_combine(o.seed, hash_str("eval-episodes")));
  std::vector<Episode> episodes;
  for (int i = 0; i < o.count; ++i) episodes.push_back(sample_episode(corpus, allowed, scfg, rng));

  const std::uint64_t graph_seed = hash_combine(o.seed, hash_str("eval-graph"));
  std::vector<std::vector<PairPrediction>> scored(episodes.size());
  train_detail::parallel_for(o.jobs, episodes.size(), [&](std::size_t i) {
    scored[i] = score_episode(bundle.params, bundle.config, corpus, episodes[i], bundle.vocab,
                              hash_combine(graph_seed, i));
  });
  std::vector<ScoredFact> golds, preds;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    collect_facts(scored[i], episodes[i], static_cast<int>(i), golds, preds);
  }
  const F1Report report =
      aggregate(golds, preds, allowed, aggregation_from_name(o.aggregation));

  std::cout << std::setprecision(6);
  if (o.metric == "macro" || o.metric == "both") {
    std::cout << "macro_f1 " << report.macro_f1 << "\n";
  }
  if (o.metric == "micro" || o.metric == "both") {
    std::cout << "micro_f1 " << report.micro_f1 << "\n";
  }
  if (!o.out_path.empty()) {
    write_text_file(o.out_path, report.to_json() + "\n");
    std::cout << "wrote report to " << o.out_path << "\n";
  }
}

void run_export_embeddings(const Opts& o) {
  const ModelBundle bundle = load_bundle(o.checkpoint, o.vocab_path);
  const Matrix<double>& emb = bundle.params.at("enc.embed");
  if (emb.rows() != static_cast<long>(bundle.vocab.size())) {
    throw_internal("embedding rows do not match the vocabulary");
  }
  std::ostringstream out;
  out << std::setprecision(17);
  for (long i = 0; i < emb.rows(); ++i) {
    out << bundle.vocab.tokens[static_cast<std::size_t>(i)];
    for (long j = 0; j < emb.cols(); ++j) out << "\t" << emb(i, j);
    out << "\n";
  }
  if (o.out_path.empty()) {
    std::cout << out.str();
  } else {
    write_text_file(o.out_path, out.str());
    std::cout << "wrote " << emb.rows() << " embeddings to " << o.out_path << "\n";
  }
}

void add_sampling_flags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--setting", o.setting, "Episode shape")
      ->check(CLI::IsMember({"1doc", "3doc"}));
  cmd->add_option("--strategy", o.strategy, "Support annotation strategy")
      ->check(CLI::IsMember({"single", "hard"}));
  cmd->add_option("--max_retries", o.train.max_retries, "Sampling retries before degrading");
}

void add_model_flags(CLI::App* cmd, Opts& o) {
  ModelConfig& m = o.train.model;
  cmd->add_option("--d", m.encoder.d, "Hidden width");
  cmd->add_option("--heads", m.encoder.heads, "Attention heads");
  cmd->add_option("--layers", m.encoder.layers, "Encoder layers");
  cmd->add_option("--ffn_dim", m.encoder.ffn_dim, "Feed-forward width");
  cmd->add_option("--max_len", m.encoder.max_len, "Token cap per document");
  cmd->add_option("--attn_source", m.encoder.attn_source, "Attention maps to pool")
      ->check(CLI::IsMember({"final", "mean"}));
  cmd->add_option("--omega", m.omega, "Support instances kept per relation prototype");
  cmd->add_option("--beta", m.beta, "Support NOTA instances fed to the prototype learner");
  cmd->add_option("--alpha", m.alpha, "Focal exponent on positive terms");
  cmd->add_option("--tpl_hidden", m.tpl_hidden, "Prototype-learner hidden width (0: 2*d)");
  cmd->add_option("--cap_per_doc", m.cap_per_doc, "NOTA pool cap per support document");
  cmd->add_option("--use_he", m.use_he, "Hybrid attention-based pair encoding");
  cmd->add_option("--use_tpl", m.use_tpl, "Learned NOTA prototype");
  cmd->add_option("--use_dwc", m.use_dwc, "Focal weighting of positive terms");
  cmd->add_option("--positives_from_model", m.positives_from_model,
                  "Pick loss negatives from model scores instead of gold labels");
  cmd->add_option("--pool", o.pool, "Mention pooling")->check(CLI::IsMember({"token", "mention"}));
  cmd->add_option("--degenerate", o.degenerate, "Policy for all-masked attention rows")
      ->check(CLI::IsMember({"error", "uniform"}));
}

void add_vat_flags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--vat", o.vat, "Adversarial training mode")
      ->check(CLI::IsMember({"off", "freelb"}));
  cmd->add_option("--rho", o.train.vat.rho, "Ascent steps per episode");
  cmd->add_option("--gamma", o.train.vat.gamma, "Ascent step size");
  cmd->add_option("--epsilon", o.train.vat.epsilon, "Perturbation norm budget");
  cmd->add_option("--init_mode", o.init_mode, "Perturbation start")
      ->check(CLI::IsMember({"zeros", "uniform_ball"}));
}

void add_train_flags(CLI::App* cmd, Opts& o) {
  TrainConfig& t = o.train;
  cmd->add_option("--base_lr", t.base_lr, "Peak learning rate");
  cmd->add_option("--warmup_frac", t.warmup_frac, "Warmup share of the schedule");
  cmd->add_option("--clip_norm", t.clip_norm, "Global gradient-norm clip");
  cmd->add_option("--episodes", t.episodes, "Optimizer steps");
  cmd->add_option("--eval_interval", t.eval_interval, "Steps between dev evaluations");
  cmd->add_option("--patience", t.patience, "Stale dev evaluations before stopping");
  cmd->add_option("--dev_episodes", t.dev_episodes, "Fixed dev episode count");
  cmd->add_option("--error_budget", t.error_budget, "Skipped episodes tolerated");
  cmd->add_option("--split_mode", t.split_mode, "Relation split policy")
      ->check(CLI::IsMember({"disjoint", "shared"}));
  cmd->add_option("--train_frac", t.train_frac, "Relation share for training");
  cmd->add_option("--dev_frac", t.dev_frac, "Relation share for dev");
  cmd->add_option("--test_frac", t.test_frac, "Relation share held out");
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Few-shot document-level relation extraction workbench"};
  app.set_version_flag("--version", std::string("fsre ") + kCliVersion);
  app.require_subcommand(1);
  Opts o;

  CLI::App* gen = app.add_subcommand("gen-corpus", "Write a synthetic labeled corpus");
  gen->add_option("--out", o.out_path, "Corpus JSON path")->required();
  gen->add_option("--documents", o.gen.documents, "Document count");
  gen->add_option("--relation_types", o.gen.relation_types, "Relation inventory size");
  gen->add_option("--vocab_size", o.gen.vocab_size, "Filler vocabulary size");
  gen->add_option("--entities_per_doc", o.gen.entities_per_doc, "Entities per document");
  gen->add_option("--nota_fraction", o.gen.nota_fraction, "Target share of unrelated pairs");
  gen->add_flag("--domain_shift", o.gen.domain_shift, "Use the shifted filler half");
  gen->add_option("--max_len", o.gen.max_flat_len, "Token cap per document");
  gen->add_option("--seed", o.seed, "Generator seed");

  CLI::App* sample = app.add_subcommand("sample", "Print sampled episodes as JSON");
  sample->add_option("--corpus", o.corpus_path, "Corpus JSON (default: built-in synthetic)");
  sample->add_option("--out", o.out_path, "Write episodes here instead of stdout");
  sample->add_option("--relations", o.relations, "Restrict to these relation types")
      ->delimiter(',');
  sample->add_option("--count", o.count, "Episodes to sample");
  sample->add_option("--seed", o.seed, "Sampler seed");
  add_sampling_flags(sample, o);

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Audit analytic gradients against finite differences");
  gradcheck->add_option("--d", o.gc_d, "Hidden width");
  gradcheck->add_option("--heads", o.gc_heads, "Attention heads");
  gradcheck->add_option("--layers", o.gc_layers, "Encoder layers");
  gradcheck->add_option("--max_len", o.gc_max_len, "Token cap per document");
  gradcheck->add_option("--omega", o.gc_omega, "Support instances per prototype");
  gradcheck->add_option("--beta", o.gc_beta, "NOTA instances for the prototype learner");
  gradcheck->add_option("--tol", o.gc_tol, "Worst relative error allowed");
  gradcheck->add_option("--seed", o.seed, "Corpus, init, and episode seed");
  gradcheck->add_option("--setting", o.setting, "Episode shape")
      ->check(CLI::IsMember({"1doc", "3doc"}));

  CLI::App* train_cmd = app.add_subcommand("train", "Run the episodic training loop");
  train_cmd->add_option("--config", o.config_file,
                        "Read flat key=value options from a file (flags win)");
  train_cmd->add_option("--corpus", o.corpus_path, "Corpus JSON path")->required();
  train_cmd->add_option("--out", o.out_path, "Run directory")->required();
  train_cmd->add_option("--seed", o.seed, "Master seed");
  train_cmd->add_option("--jobs", o.jobs, "Worker threads for dev evaluation");
  train_cmd->add_option("--precision", o.precision, "Training scalar type")
      ->check(CLI::IsMember({"f32", "f64"}));
  add_sampling_flags(train_cmd, o);
  add_model_flags(train_cmd, o);
  add_vat_flags(train_cmd, o);
  add_train_flags(train_cmd, o);

  CLI::App* eval = app.add_subcommand("eval", "Score fresh episodes with a checkpoint");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  eval->add_option("--corpus", o.corpus_path, "Corpus JSON path")->required();
  eval->add_option("--vocab", o.vocab_path, "Vocabulary file (default: from sidecar)");
  eval->add_option("--out", o.out_path, "Write the full JSON report here");
  eval->add_option("--count", o.count, "Episodes to sample");
  eval->add_option("--seed", o.seed, "Episode seed");
  eval->add_option("--jobs", o.jobs, "Worker threads");
  eval->add_option("--metric", o.metric, "Metric lines to print")
      ->check(CLI::IsMember({"macro", "micro", "both"}));
  eval->add_option("--aggregation", o.aggregation, "Pool counts or average per episode")
      ->check(CLI::IsMember({"pooled", "per_episode"}));
  eval->add_option("--split", o.split, "Relation universe to sample from")
      ->check(CLI::IsMember({"all", "train", "dev", "test"}));
  eval->add_option("--split_seed", o.split_seed,
                   "Seed that produced the training relation split");
  eval->add_option("--train_frac", o.train.train_frac, "Relation share for training");
  eval->add_option("--dev_frac", o.train.dev_frac, "Relation share for dev");
  eval->add_option("--test_frac", o.train.test_frac, "Relation share held out");
  add_sampling_flags(eval, o);

  CLI::App* exp = app.add_subcommand("export-embeddings", "Dump token embeddings as TSV");
  exp->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  exp->add_option("--vocab", o.vocab_path, "Vocabulary file (default: from sidecar)");
  exp->add_option("--out", o.out_path, "TSV path (default: stdout)");

  gen->callback([&] { run_gen_corpus(o); });
  sample->callback([&] { run_sample(o); });
  gradcheck->callback([&] { run_gradcheck(o); });
  train_cmd->callback([&] { run_train(o, train_cmd->config_to_str(true, true)); });
  eval->callback([&] { run_eval(o); });
  exp->callback([&] { run_export_embeddings(o); });

  try {
    const std::vector<std::string> expanded = expand_config_args(args, train_cmd);
    std::vector<const char*> argv;
    argv.push_back("fsre");
    for (const std::string& a : expanded) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace fsre
