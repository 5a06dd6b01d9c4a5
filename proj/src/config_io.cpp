#include <json.hpp>

#include "fsre/model.hpp"

namespace fsre {

PoolMode pool_from_name(const std::string& name) {
  if (name == "token") return PoolMode::kToken;
  if (name == "mention") return PoolMode::kMention;
  throw_config("unknown pooling mode '" + name + "'");
}

DegeneratePolicy degenerate_from_name(const std::string& name) {
  if (name == "error") return DegeneratePolicy::kError;
  if (name == "uniform") return DegeneratePolicy::kUniform;
  throw_config("unknown degenerate-attention policy '" + name + "'");
}

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["encoder"] = {{"vocab_size", cfg.encoder.vocab_size}, {"d", cfg.encoder.d},
                  {"heads", cfg.encoder.heads},           {"layers", cfg.encoder.layers},
                  {"max_len", cfg.encoder.max_len},       {"ffn_dim", cfg.encoder.ffn_dim},
                  {"attn_source", cfg.encoder.attn_source}};
  j["omega"] = cfg.omega;
  j["beta"] = cfg.beta;
  j["alpha"] = cfg.alpha;
  j["tpl_hidden"] = cfg.tpl_hidden;
  j["cap_per_doc"] = cfg.cap_per_doc;
  j["use_he"] = cfg.use_he;
  j["use_tpl"] = cfg.use_tpl;
  j["use_dwc"] = cfg.use_dwc;
  j["positives_from_model"] = cfg.positives_from_model;
  j["pool"] = cfg.pool == PoolMode::kToken ? "token" : "mention";
  j["degenerate"] = cfg.degenerate == DegeneratePolicy::kError ? "error" : "uniform";
  return j.dump(1);
}

ModelConfig model_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_config(std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig cfg;
  try {
    const auto& e = j.at("encoder");
    cfg.encoder.vocab_size = e.at("vocab_size").get<int>();
    cfg.encoder.d = e.at("d").get<int>();
    cfg.encoder.heads = e.at("heads").get<int>();
    cfg.encoder.layers = e.at("layers").get<int>();
    cfg.encoder.max_len = e.at("max_len").get<int>();
    cfg.encoder.ffn_dim = e.at("ffn_dim").get<int>();
    cfg.encoder.attn_source = e.at("attn_source").get<std::string>();
    cfg.omega = j.at("omega").get<int>();
    cfg.beta = j.at("beta").get<int>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.tpl_hidden = j.at("tpl_hidden").get<int>();
    cfg.cap_per_doc = j.at("cap_per_doc").get<int>();
    cfg.use_he = j.at("use_he").get<bool>();
    cfg.use_tpl = j.at("use_tpl").get<bool>();
    cfg.use_dwc = j.at("use_dwc").get<bool>();
    cfg.positives_from_model = j.at("positives_from_model").get<bool>();
    cfg.pool = pool_from_name(j.at("pool").get<std::string>());
    cfg.degenerate = degenerate_from_name(j.at("degenerate").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw_config(std::string("model config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace fsre
