#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "fsre/corpus.hpp"

namespace fsre {

// Word-level vocabulary with a reserved out-of-vocabulary bucket at id 0.
// Construction is deterministic: tokens ordered by count descending, then
// lexicographically.
struct Vocab {
  std::vector<std::string> tokens;  // id -> token; tokens[0] is the OOV marker
  std::unordered_map<std::string, int> ids;

  int id(const std::string& token) const {
    auto it = ids.find(token);
    return it == ids.end() ? 0 : it->second;
  }
  int size() const { return static_cast<int>(tokens.size()); }

  std::vector<int> encode(const std::vector<std::string>& words) const {
    std::vector<int> out(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) out[i] = id(words[i]);
    return out;
  }
};

// max_size 0 means unbounded; otherwise the vocabulary keeps the OOV bucket
// plus the max_size - 1 best-ranked tokens.
Vocab build_vocab(const std::vector<const Corpus*>& corpora, std::size_t max_size = 0);
Vocab build_vocab(const Corpus& corpus, std::size_t max_size = 0);

// One token per line, line number = id. The first line is the OOV marker.
void save_vocab_file(const Vocab& vocab, const std::string& path);
Vocab load_vocab_file(const std::string& path);

}  // namespace fsre
