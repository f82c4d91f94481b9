#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/signal/signal.hpp"
#include "neurotrack/speechfeat/alignment.hpp"
#include "neurotrack/speechfeat/lexicon.hpp"
#include "neurotrack/speechfeat/ngram.hpp"

namespace neurotrack::speechfeat {

inline constexpr double kFeatureFs = 64.0;

// Single named speech-feature stream, always mono at 64 Hz.
struct FeatureStream {
  std::string name;
  neurotrack::MultichannelSignal signal;

  void validate() const {
    detail::require(signal.channels() == 1, "FeatureStream: must be mono");
    detail::require(signal.fs() == kFeatureFs, "FeatureStream: fs must be 64 Hz");
  }
};

namespace detail {

using neurotrack::detail::ensure;
using neurotrack::detail::require;

// Nearest-sample index for an onset time; ties round away from zero.
inline std::int64_t onset_sample(double onset_s, double fs) {
  return std::llround(onset_s * fs);
}

}  // namespace detail

// Sparse impulse train: amplitude values[i] at the sample nearest token i's
// onset. An onset in the last half-sample clamps to the final sample.
inline MultichannelSignal encode_linguistic(const AlignmentTrack& track,
                                                    const std::vector<double>& values,
                                                    double fs = kFeatureFs) {
  detail::require(fs == kFeatureFs, "encode_linguistic: fs must be 64 Hz");
  detail::require(values.size() == track.tokens.size(),
                  "encode_linguistic: one value per token required");
  track.validate();
  const std::size_t n = static_cast<std::size_t>(std::llround(track.duration_s * fs));
  detail::require(n > 0, "encode_linguistic: empty duration");
  MultichannelSignal out(1, n, fs);
  for (std::size_t i = 0; i < track.tokens.size(); ++i) {
    detail::require(values[i] >= 0.0, "encode_linguistic: negative value");
    detail::require(track.tokens[i].onset_s < track.duration_s,
                    "encode_linguistic: onset beyond duration");
    std::int64_t s = detail::onset_sample(track.tokens[i].onset_s, fs);
    if (s >= static_cast<std::int64_t>(n)) s = static_cast<std::int64_t>(n) - 1;
    out.at(0, static_cast<std::size_t>(s)) = values[i];
  }
  return out;
}

// Unit impulse at each token onset.
inline MultichannelSignal onset_train(const AlignmentTrack& track,
                                              double fs = kFeatureFs) {
  return encode_linguistic(track, std::vector<double>(track.tokens.size(), 1.0), fs);
}

// The canonical feature-set names, in reporting order.
inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "env_delta",         "env_theta",        "env_alpha",      "env_beta",
      "env_broad",         "word_onsets",      "phoneme_onsets", "word_frequency",
      "word_surprisal",    "phoneme_surprisal", "cohort_entropy",
  };
  return names;
}

struct LinguisticTracks {
  AlignmentTrack words;
  AlignmentTrack phonemes;
};

// Build the six non-envelope streams from alignment tracks and the language
// models. Word-level values land on word onsets, phoneme-level values on
// phoneme onsets.
inline std::vector<FeatureStream> build_linguistic_features(
    const LinguisticTracks& tracks, const Lexicon& lex, const CohortModel& cohort,
    const BigramModel& bigram, const std::vector<bool>& sentence_initial = {}) {
  detail::require(tracks.words.level == TrackLevel::kWord, "words track has wrong level");
  detail::require(tracks.phonemes.level == TrackLevel::kPhoneme, "phonemes track has wrong level");
  const auto words = tracks.words.symbols();
  const auto wv = word_values(bigram, lex, words, sentence_initial);

  std::vector<double> freq(words.size()), wsurp(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    freq[i] = wv[i].frequency_bits;
    wsurp[i] = wv[i].surprisal_bits;
  }

  // Phoneme-level values, word by word; phoneme tokens must partition words.
  std::vector<double> psurp, pent;
  psurp.reserve(tracks.phonemes.tokens.size());
  pent.reserve(tracks.phonemes.tokens.size());
  std::size_t cursor = 0;
  for (const auto& word : words) {
    const auto& pron = lex.entry(word).pronunciation;
    detail::require(cursor + pron.size() <= tracks.phonemes.tokens.size(),
                    "phoneme track shorter than lexicon pronunciations");
    const auto values = cohort.word_values(pron);
    for (std::size_t i = 0; i < pron.size(); ++i) {
      detail::require(tracks.phonemes.tokens[cursor + i].symbol == pron[i],
                      "phoneme track disagrees with lexicon pronunciation of '" + word + "'");
      psurp.push_back(values[i].surprisal_bits);
      pent.push_back(values[i].entropy_bits);
    }
    cursor += pron.size();
  }
  detail::require(cursor == tracks.phonemes.tokens.size(),
                  "phoneme track longer than lexicon pronunciations");

  std::vector<FeatureStream> out;
  out.push_back({"word_onsets", onset_train(tracks.words)});
  out.push_back({"phoneme_onsets", onset_train(tracks.phonemes)});
  out.push_back({"word_frequency", encode_linguistic(tracks.words, freq)});
  out.push_back({"word_surprisal", encode_linguistic(tracks.words, wsurp)});
  out.push_back({"phoneme_surprisal", encode_linguistic(tracks.phonemes, psurp)});
  out.push_back({"cohort_entropy", encode_linguistic(tracks.phonemes, pent)});
  for (const auto& f : out) f.validate();
  return out;
}

}  // namespace neurotrack::speechfeat
