#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/core/rng.hpp"
#include "neurotrack/speechfeat/lexicon.hpp"
#include "neurotrack/speechfeat/ngram.hpp"

namespace neurotrack::cohortsim {

namespace detail {
using neurotrack::detail::ensure;
using neurotrack::detail::require;
}  // namespace detail

// Synthetic toy language: a lexicon with pronunciations plus a text corpus
// that the n-gram model is fitted on. Word counts in the lexicon equal the
// corpus occurrence counts so frequency values stay self-consistent.
struct LanguageSpec {
  std::size_t n_words = 150;       // vocabulary candidates (50-500)
  std::size_t n_sentences = 1500;  // corpus size
  double add_k = 0.1;              // bigram smoothing
  std::uint64_t seed = 777000;

  void validate() const {
    detail::require(n_words >= 50 && n_words <= 500,
                    "LanguageSpec: vocabulary must have 50-500 words");
    detail::require(n_sentences >= 10, "LanguageSpec: corpus too small");
  }
};

struct Language {
  speechfeat::Lexicon lexicon;
  speechfeat::BigramModel bigram{0.1};
  std::vector<std::string> corpus_lines;
  double add_k = 0.1;
};

namespace detail {

inline const std::vector<std::string>& consonants() {
  static const std::vector<std::string> c = {"p", "t", "k", "b", "d", "g", "m",
                                             "n", "s", "z", "f", "l", "r", "w"};
  return c;
}
inline const std::vector<std::string>& vowels() {
  static const std::vector<std::string> v = {"a", "e", "i", "o", "u"};
  return v;
}

// CV-alternating pronunciation, 2-6 phonemes.
inline std::vector<std::string> sample_pronunciation(Rng& rng) {
  const std::size_t len = 2 + rng.below(5);
  std::vector<std::string> pron;
  bool consonant = rng.below(2) == 0;
  for (std::size_t i = 0; i < len; ++i) {
    const auto& pool = consonant ? consonants() : vowels();
    pron.push_back(pool[rng.below(pool.size())]);
    consonant = !consonant;
  }
  return pron;
}

}  // namespace detail

// Deterministic synthetic language. A latent Zipf unigram plus sparse bigram
// preferences generate the corpus; the fitted BigramModel and lexicon are
// derived from that corpus alone.
inline Language make_language(const LanguageSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Vocabulary with unique pronunciations; word string = joined phonemes.
  std::vector<std::string> words;
  std::vector<std::vector<std::string>> prons;
  std::set<std::string> seen;
  while (words.size() < spec.n_words) {
    auto pron = detail::sample_pronunciation(rng);
    std::string word;
    for (const auto& p : pron) word += p;
    if (!seen.insert(word).second) continue;
    words.push_back(word);
    prons.push_back(std::move(pron));
  }

  // Latent generator: Zipf unigram, boosted transitions to 4 preferred
  // successors per word.
  const std::size_t v = words.size();
  std::vector<double> unigram(v);
  for (std::size_t i = 0; i < v; ++i) unigram[i] = 1.0 / static_cast<double>(i + 2);
  std::vector<std::vector<std::size_t>> preferred(v);
  for (std::size_t i = 0; i < v; ++i)
    for (int j = 0; j < 4; ++j) preferred[i].push_back(rng.below(v));

  auto sample_next = [&](std::size_t prev_or_npos) {
    std::vector<double> w = unigram;
    if (prev_or_npos != static_cast<std::size_t>(-1))
      for (auto s : preferred[prev_or_npos]) w[s] += 8.0 * unigram[s];
    double total = 0.0;
    for (double x : w) total += x;
    double r = rng.uniform() * total;
    for (std::size_t i = 0; i < v; ++i) {
      r -= w[i];
      if (r <= 0.0) return i;
    }
    return v - 1;
  };

  Language lang;
  lang.add_k = spec.add_k;
  lang.bigram = speechfeat::BigramModel(spec.add_k);
  std::map<std::string, std::uint64_t> counts;
  for (std::size_t s = 0; s < spec.n_sentences; ++s) {
    const std::size_t len = 4 + rng.below(9);
    std::size_t prev = static_cast<std::size_t>(-1);
    std::string line;
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t w = sample_next(prev);
      if (i) line += ' ';
      line += words[w];
      ++counts[words[w]];
      prev = w;
    }
    lang.bigram.add_corpus_line(line);
    lang.corpus_lines.push_back(std::move(line));
  }

  for (std::size_t i = 0; i < v; ++i) {
    const auto it = counts.find(words[i]);
    if (it != counts.end()) lang.lexicon.add(words[i], prons[i], it->second);
  }
  detail::ensure(lang.lexicon.size() >= 50, "make_language: corpus covered too few words");
  return lang;
}

// Sample one word from the fitted bigram's smoothed conditional, restricted
// to the real vocabulary (never <unk>).
inline std::string sample_word(const speechfeat::BigramModel& bigram, const std::string& prev,
                               Rng& rng) {
  const auto& vocab = bigram.vocabulary();
  double total = 0.0;
  for (const auto& [w, c] : vocab) total += bigram.probability(prev, w);
  double r = rng.uniform() * total;
  for (const auto& [w, c] : vocab) {
    r -= bigram.probability(prev, w);
    if (r <= 0.0) return w;
  }
  return vocab.rbegin()->first;
}

}  // namespace neurotrack::cohortsim
