#include "fsre/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace fsre {

namespace {
constexpr const char* kOov = "<unk>";
}

Vocab build_vocab(const std::vector<const Corpus*>& corpora, std::size_t max_size) {
  std::map<std::string, long> counts;
  for (const Corpus* corpus : corpora) {
    for (const Document& doc : corpus->documents) {
      for (const auto& sentence : doc.sentences) {
        for (const std::string& token : sentence) counts[token] += 1;
      }
    }
  }
  counts.erase(kOov);  // the marker is reserved regardless of the text

  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (max_size > 0 && ranked.size() + 1 > max_size) ranked.resize(max_size - 1);

  Vocab vocab;
  vocab.tokens.push_back(kOov);
  for (const auto& [token, n] : ranked) vocab.tokens.push_back(token);
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
    vocab.ids[vocab.tokens[i]] = static_cast<int>(i);
  }
  return vocab;
}

Vocab build_vocab(const Corpus& corpus, std::size_t max_size) {
  return build_vocab(std::vector<const Corpus*>{&corpus}, max_size);
}

void save_vocab_file(const Vocab& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write vocabulary '" + path + "'");
  for (const std::string& token : vocab.tokens) out << token << "\n";
  if (!out) throw_data("failed writing vocabulary '" + path + "'");
}

Vocab load_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open vocabulary '" + path + "'");
  Vocab vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (vocab.ids.count(line)) throw_data("duplicate vocabulary token '" + line + "'");
    vocab.ids[line] = static_cast<int>(vocab.tokens.size());
    vocab.tokens.push_back(line);
  }
  if (vocab.tokens.empty()) throw_data("vocabulary '" + path + "' is empty");
  return vocab;
}

}  // namespace fsre
