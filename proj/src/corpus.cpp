#include "fsre/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fsre {

using json = nlohmann::ordered_json;

namespace {

std::string doc_label(const Document& doc, std::size_t index) {
  if (!doc.doc_id.empty()) return "'" + doc.doc_id + "'";
  return "#" + std::to_string(index);
}

json corpus_to_json(const Corpus& corpus) {
  json out = json::array();
  for (const auto& doc : corpus.documents) {
    json jdoc;
    jdoc["title"] = doc.doc_id;
    jdoc["sents"] = doc.sentences;
    json vertex = json::array();
    for (const auto& entity : doc.entities) {
      json jent = json::array();
      for (const auto& m : entity.mentions) {
        json jm;
        jm["sent_id"] = m.sent_id;
        jm["pos"] = {m.start, m.end};
        jm["name"] = m.surface;
        jent.push_back(std::move(jm));
      }
      vertex.push_back(std::move(jent));
    }
    jdoc["vertexSet"] = std::move(vertex);
    json labels = json::array();
    for (const auto& fact : doc.facts) {
      json jf;
      jf["h"] = fact.head;
      jf["t"] = fact.tail;
      jf["r"] = fact.relation;
      labels.push_back(std::move(jf));
    }
    jdoc["labels"] = std::move(labels);
    out.push_back(std::move(jdoc));
  }
  return out;
}

Document document_from_json(const json& jdoc, std::size_t index) {
  Document doc;
  try {
    doc.doc_id = jdoc.at("title").get<std::string>();
    doc.sentences = jdoc.at("sents").get<std::vector<std::vector<std::string>>>();
    for (const auto& jent : jdoc.at("vertexSet")) {
      Entity entity;
      for (const auto& jm : jent) {
        Mention m;
        m.sent_id = jm.at("sent_id").get<int>();
        const auto& pos = jm.at("pos");
        if (!pos.is_array() || pos.size() != 2) {
          throw_data("document " + doc_label(doc, index) + ": mention 'pos' must be [start,end)");
        }
        m.start = pos[0].get<int>();
        m.end = pos[1].get<int>();
        m.surface = jm.value("name", std::string{});
        entity.mentions.push_back(std::move(m));
      }
      doc.entities.push_back(std::move(entity));
    }
    for (const auto& jf : jdoc.at("labels")) {
      RelationFact fact;
      fact.head = jf.at("h").get<int>();
      fact.tail = jf.at("t").get<int>();
      fact.relation = jf.at("r").get<std::string>();
      doc.facts.push_back(std::move(fact));
    }
  } catch (const json::exception& e) {
    throw_data("document " + doc_label(doc, index) + ": " + e.what());
  }
  return doc;
}

}  // namespace

void validate_document(const Document& doc, int max_flat_len) {
  const std::string label = "document '" + doc.doc_id + "'";
  const int n_entities = static_cast<int>(doc.entities.size());
  for (std::size_t ei = 0; ei < doc.entities.size(); ++ei) {
    const Entity& entity = doc.entities[ei];
    if (entity.mentions.empty()) {
      throw_data(label + ": entity " + std::to_string(ei) + " has no mentions");
    }
    for (const Mention& m : entity.mentions) {
      if (m.sent_id < 0 || m.sent_id >= static_cast<int>(doc.sentences.size())) {
        throw_data(label + ": mention sent_id " + std::to_string(m.sent_id) + " out of range");
      }
      const int sent_len = static_cast<int>(doc.sentences[m.sent_id].size());
      if (m.start < 0 || m.start >= m.end || m.end > sent_len) {
        throw_data(label + ": mention span [" + std::to_string(m.start) + "," +
                   std::to_string(m.end) + ") invalid for sentence of length " +
                   std::to_string(sent_len));
      }
    }
  }
  std::set<std::tuple<int, std::string, int>> seen;
  for (const RelationFact& fact : doc.facts) {
    if (fact.head == fact.tail) {
      throw_data(label + ": fact with head == tail (" + std::to_string(fact.head) + ")");
    }
    if (fact.head < 0 || fact.head >= n_entities || fact.tail < 0 || fact.tail >= n_entities) {
      throw_data(label + ": fact references entity out of range");
    }
    if (!seen.insert({fact.head, fact.relation, fact.tail}).second) {
      throw_data(label + ": duplicate fact (" + std::to_string(fact.head) + "," + fact.relation +
                 "," + std::to_string(fact.tail) + ")");
    }
  }
  std::size_t total = 0;
  for (const auto& sent : doc.sentences) total += sent.size();
  if (total > static_cast<std::size_t>(max_flat_len)) {
    throw_data(label + ": flattened length " + std::to_string(total) + " exceeds max " +
               std::to_string(max_flat_len));
  }
}

void validate_corpus(const Corpus& corpus, int max_flat_len) {
  std::set<std::string> ids;
  std::set<std::string> inventory(corpus.relation_inventory.begin(),
                                  corpus.relation_inventory.end());
  if (inventory.size() != corpus.relation_inventory.size()) {
    throw_data("relation inventory contains duplicates");
  }
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const Document& doc = corpus.documents[i];
    if (!ids.insert(doc.doc_id).second) {
      throw_data("duplicate doc_id '" + doc.doc_id + "'");
    }
    validate_document(doc, max_flat_len);
    for (const RelationFact& fact : doc.facts) {
      if (!inventory.count(fact.relation)) {
        throw_data("document '" + doc.doc_id + "': unknown relation id '" + fact.relation + "'");
      }
    }
  }
}

Corpus parse_corpus(std::istream& raw, const ParseOptions& opts) {
  if (opts.schema != CorpusSchema::kDocRed) {
    throw_config("unsupported corpus schema tag");
  }
  json root;
  try {
    root = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw_data(std::string("corpus parse error: ") + e.what());
  }
  if (!root.is_array()) {
    throw_data("corpus file must be a JSON list of documents");
  }
  Corpus corpus;
  for (std::size_t i = 0; i < root.size(); ++i) {
    corpus.documents.push_back(document_from_json(root[i], i));
  }
  if (opts.inventory.has_value()) {
    corpus.relation_inventory = *opts.inventory;
  } else {
    std::set<std::string> seen;
    for (const auto& doc : corpus.documents) {
      for (const auto& fact : doc.facts) {
        if (seen.insert(fact.relation).second) {
          corpus.relation_inventory.push_back(fact.relation);
        }
      }
    }
  }
  validate_corpus(corpus, opts.max_flat_len);
  return corpus;
}

Corpus parse_corpus(const std::string& raw, const ParseOptions& opts) {
  std::istringstream in(raw);
  return parse_corpus(in, opts);
}

Corpus load_corpus_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open corpus file '" + path + "'");
  return parse_corpus(in, opts);
}

std::string serialize_corpus(const Corpus& corpus) { return corpus_to_json(corpus).dump(1); }

void save_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write corpus file '" + path + "'");
  out << serialize_corpus(corpus);
  if (!out) throw_data("failed writing corpus file '" + path + "'");
}

std::vector<std::string> load_inventory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open inventory file '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw_data(std::string("inventory parse error: ") + e.what());
  }
  if (!root.is_array()) throw_data("inventory file must be a JSON list of relation ids");
  std::vector<std::string> inventory;
  for (const auto& item : root) inventory.push_back(item.get<std::string>());
  return inventory;
}

void save_inventory_file(const std::vector<std::string>& inventory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write inventory file '" + path + "'");
  out << json(inventory).dump(1);
}

FlatDocument flatten_tokens(const Document& doc, int max_flat_len) {
  FlatDocument flat;
  std::vector<int> offsets(doc.sentences.size() + 1, 0);
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    offsets[s + 1] = offsets[s] + static_cast<int>(doc.sentences[s].size());
    flat.tokens.insert(flat.tokens.end(), doc.sentences[s].begin(), doc.sentences[s].end());
  }
  flat.length = offsets.back();
  if (flat.length > max_flat_len) {
    throw_data("document '" + doc.doc_id + "': flattened length " + std::to_string(flat.length) +
               " exceeds max " + std::to_string(max_flat_len) + " (truncation is not supported)");
  }
  flat.global_spans.resize(doc.entities.size());
  for (std::size_t ei = 0; ei < doc.entities.size(); ++ei) {
    for (const Mention& m : doc.entities[ei].mentions) {
      const int base = offsets[m.sent_id];
      flat.global_spans[ei].push_back({base + m.start, base + m.end});
    }
  }
  return flat;
}

namespace {

struct PlannedFact {
  int head;
  int tail;
  int relation;
};

}  // namespace

Corpus generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.documents <= 0) throw_config("generator: documents must be positive");
  if (spec.relation_types <= 0) throw_config("generator: relation_types must be positive");
  if (spec.vocab_size < 2) throw_config("generator: vocab_size must be at least 2");
  if (spec.entities_per_doc < 2) {
    throw_config("generator: entities_per_doc must be at least 2 to form pairs");
  }
  if (spec.nota_fraction < 0.0 || spec.nota_fraction > 1.0) {
    throw_config("generator: nota_fraction must lie in [0,1]");
  }

  const int n_ent = spec.entities_per_doc;
  const long pairs_per_doc = static_cast<long>(n_ent) * (n_ent - 1);
  const long total_pairs = pairs_per_doc * spec.documents;
  const long total_facts = std::lround((1.0 - spec.nota_fraction) * static_cast<double>(total_pairs));
  const long base_facts = total_facts / spec.documents;
  const long extra_docs = total_facts % spec.documents;
  if (base_facts + (extra_docs > 0 ? 1 : 0) > pairs_per_doc) {
    throw_config("generator: nota_fraction " + std::to_string(spec.nota_fraction) +
                 " needs more facts per document than " + std::to_string(n_ent) +
                 " entities can hold");
  }

  const int half_vocab = spec.vocab_size / 2;
  auto filler_name = [](int k) { return "w" + std::to_string(k); };
  auto entity_name = [](int k) { return "ent" + std::to_string(k); };
  auto trigger_name = [](int r) { return "trigger" + std::to_string(r); };
  const int name_pool = std::max(4 * n_ent, 24);

  Rng master(hash_combine(seed, hash_str("synthetic-corpus")));
  Corpus corpus;
  for (int r = 0; r < spec.relation_types; ++r) {
    corpus.relation_inventory.push_back("R" + std::to_string(r));
  }

  // Fact sentences always draw context from the base filler half; every other
  // sentence provides NOTA-pair context and honors the domain-shift knob. The
  // knob therefore changes tokens only at those positions.
  auto base_filler = [&](Rng& rng) { return filler_name(static_cast<int>(rng.below(half_vocab))); };
  auto nota_filler = [&](Rng& rng) {
    const int k = static_cast<int>(rng.below(half_vocab));
    return filler_name(spec.domain_shift ? k + half_vocab : k);
  };

  long fact_counter = 0;
  for (int d = 0; d < spec.documents; ++d) {
    Rng rng = master.split("doc", static_cast<std::uint64_t>(d));
    Document doc;
    doc.doc_id = "doc" + std::to_string(d);

    std::vector<int> names = [&] {
      std::vector<int> pool(name_pool);
      for (int i = 0; i < name_pool; ++i) pool[i] = i;
      rng.shuffle(pool);
      pool.resize(n_ent);
      return pool;
    }();
    doc.entities.resize(n_ent);

    const long n_facts = base_facts + (d < extra_docs ? 1 : 0);
    std::vector<PlannedFact> planned;
    {
      // Distinct ordered pairs for this document's facts.
      std::vector<std::pair<int, int>> all_pairs;
      for (int i = 0; i < n_ent; ++i) {
        for (int j = 0; j < n_ent; ++j) {
          if (i != j) all_pairs.push_back({i, j});
        }
      }
      rng.shuffle(all_pairs);
      for (long f = 0; f < n_facts; ++f) {
        const int rel = static_cast<int>(fact_counter % spec.relation_types);
        planned.push_back({all_pairs[f].first, all_pairs[f].second, rel});
        ++fact_counter;
      }
    }

    auto place_mention = [&](int entity, std::vector<std::string>& sent) {
      Mention m;
      m.sent_id = static_cast<int>(doc.sentences.size());  // sentence under construction
      m.start = static_cast<int>(sent.size());
      m.surface = entity_name(names[entity]);
      sent.push_back(m.surface);
      m.end = static_cast<int>(sent.size());
      doc.entities[entity].mentions.push_back(m);
    };

    for (const PlannedFact& fact : planned) {
      std::vector<std::string> sent;
      const int lead = 1 + static_cast<int>(rng.below(3));
      for (int k = 0; k < lead; ++k) sent.push_back(base_filler(rng));
      place_mention(fact.head, sent);
      if (rng.below(2) == 0) sent.push_back(base_filler(rng));
      sent.push_back(trigger_name(fact.relation));
      if (rng.below(2) == 0) sent.push_back(base_filler(rng));
      place_mention(fact.tail, sent);
      const int tail_pad = 1 + static_cast<int>(rng.below(3));
      for (int k = 0; k < tail_pad; ++k) sent.push_back(base_filler(rng));
      doc.sentences.push_back(std::move(sent));
      doc.facts.push_back({fact.head, corpus.relation_inventory[fact.relation], fact.tail});
    }

    // Context sentences cover entities the fact sentences missed, plus a
    // second mention for every third entity.
    std::vector<int> pending;
    for (int e = 0; e < n_ent; ++e) {
      if (doc.entities[e].mentions.empty()) pending.push_back(e);
    }
    for (int e = 0; e < n_ent; e += 3) pending.push_back(e);
    for (int entity : pending) {
      std::vector<std::string> sent;
      const int lead = 2 + static_cast<int>(rng.below(3));
      for (int k = 0; k < lead; ++k) sent.push_back(nota_filler(rng));
      place_mention(entity, sent);
      const int tail_pad = 2 + static_cast<int>(rng.below(3));
      for (int k = 0; k < tail_pad; ++k) sent.push_back(nota_filler(rng));
      doc.sentences.push_back(std::move(sent));
    }

    corpus.documents.push_back(std::move(doc));
  }

  validate_corpus(corpus, spec.max_flat_len);
  return corpus;
}

double nota_pair_fraction(const Corpus& corpus) {
  long total = 0;
  long labeled = 0;
  for (const Document& doc : corpus.documents) {
    const int n = static_cast<int>(doc.entities.size());
    total += static_cast<long>(n) * (n - 1);
    std::set<std::pair<int, int>> pairs;
    for (const RelationFact& fact : doc.facts) pairs.insert({fact.head, fact.tail});
    labeled += static_cast<long>(pairs.size());
  }
  if (total == 0) return 0.0;
  return 1.0 - static_cast<double>(labeled) / static_cast<double>(total);
}

}  // namespace fsre
