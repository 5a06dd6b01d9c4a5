#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fsre/types.hpp"

namespace fsre {

// Half-open token interval within one sentence.
struct Mention {
  int sent_id = 0;
  int start = 0;
  int end = 0;
  std::string surface;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Entity {
  std::vector<Mention> mentions;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct RelationFact {
  int head = 0;
  std::string relation;
  int tail = 0;

  friend bool operator==(const RelationFact&, const RelationFact&) = default;
  friend auto operator<=>(const RelationFact&, const RelationFact&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Entity> entities;
  std::vector<RelationFact> facts;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<std::string> relation_inventory;  // order defines index mapping

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class CorpusSchema { kDocRed };  // single tag for now; reserved for future formats

struct ParseOptions {
  CorpusSchema schema = CorpusSchema::kDocRed;
  int max_flat_len = 512;
  // When set, defines the inventory and its order; labels outside it are a
  // validation error. Otherwise the inventory is collected from labels in
  // order of first appearance.
  std::optional<std::vector<std::string>> inventory;
};

Corpus parse_corpus(std::istream& raw, const ParseOptions& opts = {});
Corpus parse_corpus(const std::string& raw, const ParseOptions& opts = {});
Corpus load_corpus_file(const std::string& path, const ParseOptions& opts = {});

std::string serialize_corpus(const Corpus& corpus);
void save_corpus_file(const Corpus& corpus, const std::string& path);

std::vector<std::string> load_inventory_file(const std::string& path);
void save_inventory_file(const std::vector<std::string>& inventory, const std::string& path);

// Validates one document against its own bounds: mention spans, fact indices,
// duplicate facts, flattened length. Relation membership is checked at the
// corpus level.
void validate_document(const Document& doc, int max_flat_len);
void validate_corpus(const Corpus& corpus, int max_flat_len);

// Sentences concatenated in order with per-mention global spans recomputed.
struct FlatDocument {
  std::vector<std::string> tokens;
  // global_spans[entity][mention] = {start, end} into tokens
  std::vector<std::vector<std::pair<int, int>>> global_spans;
  int length = 0;
};

FlatDocument flatten_tokens(const Document& doc, int max_flat_len = 512);

struct GeneratorSpec {
  int documents = 200;
  int relation_types = 4;
  int vocab_size = 100;       // filler vocabulary size (split in half by the shift knob)
  int entities_per_doc = 5;
  double nota_fraction = 0.964;
  bool domain_shift = false;  // draws NOTA-pair context tokens from the shifted filler half
  int max_flat_len = 512;
};

// Deterministic for a fixed (spec, seed). Each relation type is expressed by a
// trigger token planted between its head and tail mentions, so the labeling is
// recoverable from text alone.
Corpus generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed);

// Fraction of ordered entity pairs carrying no fact, pooled over documents.
double nota_pair_fraction(const Corpus& corpus);

}  // namespace fsre
