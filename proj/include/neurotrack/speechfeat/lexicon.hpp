#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack::speechfeat {

struct LexiconEntry {
  std::vector<std::string> pronunciation;  // phoneme symbols
  std::uint64_t count = 0;

  bool operator==(const LexiconEntry&) const = default;
};

// Pronunciation lexicon with usage counts. Keyed by orthographic word;
// cohort statistics pool mass across words sharing a pronunciation prefix.
class Lexicon {
 public:
  void add(const std::string& word, std::vector<std::string> pronunciation, std::uint64_t count) {
    detail::require(!word.empty(), "Lexicon: empty word");
    detail::require(!pronunciation.empty(), "Lexicon: empty pronunciation for '" + word + "'");
    detail::require(count > 0, "Lexicon: count must be positive for '" + word + "'");
    detail::require(!entries_.count(word), "Lexicon: duplicate word '" + word + "'");
    total_count_ += count;
    entries_.emplace(word, LexiconEntry{std::move(pronunciation), count});
  }

  bool contains(const std::string& word) const { return entries_.count(word) != 0; }

  const LexiconEntry& entry(const std::string& word) const {
    auto it = entries_.find(word);
    detail::require(it != entries_.end(), "Lexicon: unknown word '" + word + "'");
    return it->second;
  }

  std::uint64_t total_count() const { return total_count_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, LexiconEntry>& entries() const { return entries_; }

  // -log2(count_w / total_count), the word's information content in bits.
  double frequency_bits(const std::string& word) const {
    const auto& e = entry(word);
    return -std::log2(static_cast<double>(e.count) / static_cast<double>(total_count_));
  }

 private:
  std::map<std::string, LexiconEntry> entries_;  // ordered for reproducible iteration
  std::uint64_t total_count_ = 0;
};

// Lexicon file: word \t space-separated phonemes \t count.
inline void write_lexicon(const Lexicon& lex, const std::filesystem::path& path) {
  std::ofstream out(path);
  detail::ensure(out.is_open(), "cannot open for writing: " + path.string());
  for (const auto& [word, e] : lex.entries()) {
    out << word << '\t';
    for (std::size_t i = 0; i < e.pronunciation.size(); ++i) {
      if (i) out << ' ';
      out << e.pronunciation[i];
    }
    out << '\t' << e.count << '\n';
  }
  detail::ensure(static_cast<bool>(out), "write failed: " + path.string());
}

inline Lexicon read_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::ensure(in.is_open(), "cannot open for reading: " + path.string());
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string word, phonemes, count;
    detail::ensure(static_cast<bool>(std::getline(row, word, '\t')) &&
                       static_cast<bool>(std::getline(row, phonemes, '\t')) &&
                       static_cast<bool>(std::getline(row, count, '\t')),
                   "malformed lexicon row: " + line);
    std::vector<std::string> pron;
    std::stringstream ps(phonemes);
    std::string p;
    while (ps >> p) pron.push_back(p);
    lex.add(word, std::move(pron), std::stoull(count));
  }
  return lex;
}

struct PhonemeValues {
  double surprisal_bits = 0.0;
  double entropy_bits = 0.0;
};

// Incremental prefix-cohort model over the lexicon's pronunciations.
//
// After hearing prefix p, the cohort is every word whose pronunciation starts
// with p; its mass M(p) is the summed count. For phoneme i of a word,
//   surprisal_i = -log2(M(prefix_i) / M(prefix_{i-1}))
//   entropy_i   = -sum_w (c_w/M) log2(c_w/M) = log2(M) - (sum_w c_w log2 c_w)/M
// with both evaluated over the cohort at prefix_i.
class CohortModel {
 public:
  explicit CohortModel(const Lexicon& lex) {
    nodes_.push_back({});  // root: empty prefix
    for (const auto& [word, e] : lex.entries()) {
      const double c = static_cast<double>(e.count);
      const double clog = c * std::log2(c);
      add_to(0, c, clog);
      std::size_t node = 0;
      for (const auto& phoneme : e.pronunciation) {
        auto [it, inserted] = nodes_[node].children.try_emplace(phoneme, nodes_.size());
        if (inserted) nodes_.push_back({});
        node = it->second;
        add_to(node, c, clog);
      }
    }
  }

  // Per-phoneme surprisal and cohort entropy for one word's pronunciation.
  std::vector<PhonemeValues> word_values(const std::vector<std::string>& pronunciation) const {
    detail::require(!pronunciation.empty(), "CohortModel: empty pronunciation");
    std::vector<PhonemeValues> out;
    out.reserve(pronunciation.size());
    std::size_t node = 0;
    for (const auto& phoneme : pronunciation) {
      auto it = nodes_[node].children.find(phoneme);
      detail::require(it != nodes_[node].children.end(),
                      "CohortModel: prefix not in lexicon at phoneme '" + phoneme + "'");
      const double prev_mass = nodes_[node].mass;
      node = it->second;
      const Node& n = nodes_[node];
      PhonemeValues v;
      v.surprisal_bits = -std::log2(n.mass / prev_mass);
      v.entropy_bits = std::log2(n.mass) - n.sum_count_log2_count / n.mass;
      // Clamp tiny negative round-off (single-word cohorts give exactly 0 analytically).
      if (v.entropy_bits < 0.0 && v.entropy_bits > -1e-9) v.entropy_bits = 0.0;
      if (v.surprisal_bits < 0.0 && v.surprisal_bits > -1e-9) v.surprisal_bits = 0.0;
      out.push_back(v);
    }
    return out;
  }

  double prefix_mass(const std::vector<std::string>& prefix) const {
    std::size_t node = 0;
    for (const auto& phoneme : prefix) {
      auto it = nodes_[node].children.find(phoneme);
      if (it == nodes_[node].children.end()) return 0.0;
      node = it->second;
    }
    return nodes_[node].mass;
  }

 private:
  struct Node {
    std::map<std::string, std::size_t> children;
    double mass = 0.0;
    double sum_count_log2_count = 0.0;
  };

  void add_to(std::size_t node, double count, double count_log) {
    nodes_[node].mass += count;
    nodes_[node].sum_count_log2_count += count_log;
  }

  std::vector<Node> nodes_;
};

// Convenience: surprisal/entropy sequence for a word in the lexicon.
inline std::vector<PhonemeValues> cohort_stats(const CohortModel& model, const Lexicon& lex,
                                               const std::string& word) {
  return model.word_values(lex.entry(word).pronunciation);
}

}  // namespace neurotrack::speechfeat
