#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/speechfeat/lexicon.hpp"

namespace neurotrack::speechfeat {

inline constexpr const char* kSentenceStart = "<s>";
inline constexpr const char* kUnknownWord = "<unk>";

// Bigram language model with add-k smoothing. Sentence-initial words condition
// on a sentence-start symbol; query-side out-of-vocabulary words map to <unk>.
class BigramModel {
 public:
  explicit BigramModel(double add_k = 0.1) : add_k_(add_k) {
    detail::require(add_k >= 0.0, "BigramModel: add_k must be >= 0");
  }

  // One sentence = one whitespace-tokenized word sequence.
  void add_sentence(const std::vector<std::string>& words) {
    if (words.empty()) return;
    std::string prev = kSentenceStart;
    for (const auto& w : words) {
      detail::require(w != kSentenceStart && w != kUnknownWord,
                      "BigramModel: reserved symbol in corpus: '" + w + "'");
      vocab_.try_emplace(w, 0);
      ++vocab_[w];
      ++bigram_[prev][w];
      ++context_total_[prev];
      prev = w;
    }
  }

  void add_corpus_line(const std::string& line) {
    std::stringstream ss(line);
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(w);
    add_sentence(words);
  }

  // Vocabulary size used for smoothing: observed words plus <unk>.
  std::size_t vocab_size() const { return vocab_.size() + 1; }
  bool in_vocab(const std::string& word) const { return vocab_.count(word) != 0; }

  // p(word | prev) with add-k smoothing over the vocabulary (incl. <unk>).
  double probability(const std::string& prev_raw, const std::string& word_raw) const {
    const std::string prev = map_context(prev_raw);
    const std::string word = (word_raw == kSentenceStart) ? word_raw : map_word(word_raw);
    detail::require(word != kSentenceStart, "BigramModel: <s> cannot be predicted");
    double pair = 0.0;
    double total = 0.0;
    if (auto it = bigram_.find(prev); it != bigram_.end()) {
      if (auto jt = it->second.find(word); jt != it->second.end())
        pair = static_cast<double>(jt->second);
    }
    if (auto it = context_total_.find(prev); it != context_total_.end())
      total = static_cast<double>(it->second);
    const double denom = total + add_k_ * static_cast<double>(vocab_size());
    detail::ensure(denom > 0.0,
                   "BigramModel: unseen context '" + prev + "' with add_k = 0 has no distribution");
    return (pair + add_k_) / denom;
  }

  double surprisal_bits(const std::string& prev, const std::string& word) const {
    const double p = probability(prev, word);
    detail::ensure(p > 0.0, "BigramModel: zero probability for '" + word + "'");
    return -std::log2(p);
  }

  double add_k() const { return add_k_; }
  const std::map<std::string, std::uint64_t>& vocabulary() const { return vocab_; }

 private:
  std::string map_word(const std::string& w) const { return in_vocab(w) ? w : kUnknownWord; }
  std::string map_context(const std::string& w) const {
    return (w == kSentenceStart || in_vocab(w)) ? w : kUnknownWord;
  }

  double add_k_;
  std::map<std::string, std::uint64_t> vocab_;
  std::map<std::string, std::map<std::string, std::uint64_t>> bigram_;
  std::map<std::string, std::uint64_t> context_total_;
};

// Corpus file: one sentence per line, words whitespace-separated.
inline BigramModel read_bigram_corpus(const std::filesystem::path& path, double add_k = 0.1) {
  std::ifstream in(path);
  detail::ensure(in.is_open(), "cannot open for reading: " + path.string());
  BigramModel model(add_k);
  std::string line;
  while (std::getline(in, line)) model.add_corpus_line(line);
  return model;
}

struct WordValues {
  double frequency_bits = 0.0;
  double surprisal_bits = 0.0;
};

// Per-word frequency (from lexicon counts) and bigram surprisal for an ordered
// word list. sentence_initial[i] marks words that condition on <s>; when empty,
// only the first word is sentence-initial.
inline std::vector<WordValues> word_values(const BigramModel& model, const Lexicon& lex,
                                           const std::vector<std::string>& words,
                                           const std::vector<bool>& sentence_initial = {}) {
  detail::require(sentence_initial.empty() || sentence_initial.size() == words.size(),
                  "word_values: sentence_initial size mismatch");
  detail::require(sentence_initial.empty() || words.empty() || sentence_initial.front(),
                  "word_values: first word must be sentence-initial");
  std::vector<WordValues> out;
  out.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const bool initial = sentence_initial.empty() ? (i == 0) : bool{sentence_initial[i]};
    const std::string prev = initial ? std::string(kSentenceStart) : words[i - 1];
    WordValues v;
    v.frequency_bits = lex.frequency_bits(words[i]);
    v.surprisal_bits = model.surprisal_bits(prev, words[i]);
    out.push_back(v);
  }
  return out;
}

}  // namespace neurotrack::speechfeat
