#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "neurotrack/cohortsim/language.hpp"
#include "neurotrack/core/rng.hpp"
#include "neurotrack/signal/signal.hpp"
#include "neurotrack/speechfeat/alignment.hpp"
#include "neurotrack/speechfeat/features.hpp"

namespace neurotrack::cohortsim {

// A synthetic spoken story: aligned word/phoneme tracks, the acoustic
// waveform, and the ground-truth amplitude modulator the waveform was
// built from (kept so tests can compare it against extracted envelopes).
struct Story {
  speechfeat::AlignmentTrack words;
  speechfeat::AlignmentTrack phonemes;
  std::vector<bool> sentence_initial;       // one flag per word
  std::vector<std::string> sentences;       // text, one sentence per line
  MultichannelSignal audio;                 // mono, audio_fs
  MultichannelSignal modulator;             // mono, 64 Hz ground-truth envelope
  double duration_s = 0.0;
};

struct StorySpec {
  double minutes = 20.0;
  double audio_fs = 8192.0;
  double word_second_per_phoneme = 0.08;
  double pause_s = 0.15;  // silence between sentences
  std::uint64_t seed = 1;

  void validate() const {
    detail::require(minutes > 0.0 && minutes <= 120.0, "StorySpec: minutes must be in (0, 120]");
    detail::require(audio_fs >= 2048.0, "StorySpec: audio_fs too low");
  }
};

namespace detail {

// Hann bump over [onset, offset) scaled by a per-phoneme amplitude.
struct Bump {
  double onset, offset, amp;
};

inline double eval_bumps(const std::vector<Bump>& bumps, double t) {
  // Bumps are sorted and disjoint; binary search for the covering one.
  auto it = std::upper_bound(bumps.begin(), bumps.end(), t,
                             [](double x, const Bump& b) { return x < b.onset; });
  if (it == bumps.begin()) return 0.0;
  --it;
  if (t >= it->offset) return 0.0;
  const double u = (t - it->onset) / (it->offset - it->onset);
  const double s = std::sin(std::numbers::pi * u);
  return it->amp * s * s;
}

}  // namespace detail

// Generate a story by sampling sentences from the language's fitted bigram.
// Word duration is proportional to phoneme count (plus jitter); phonemes
// partition their word uniformly with no gaps. The audio is band-limited
// noise multiplied by per-phoneme Hann bumps. Generation stops at the first
// word boundary past the requested length, so duration overshoots by at
// most one word; the final duration is rounded up to a whole 64 Hz sample.
inline Story gen_story(const Language& lang, const StorySpec& spec) {
  spec.validate();
  using speechfeat::AlignedToken;
  Rng rng(spec.seed);

  const double target_s = spec.minutes * 60.0;
  Story story;
  std::vector<detail::Bump> bumps;
  double t = 0.0;
  bool done = false;
  while (!done) {
    const std::size_t len = 4 + rng.below(9);
    std::string prev = speechfeat::kSentenceStart;
    std::string line;
    for (std::size_t i = 0; i < len && !done; ++i) {
      const std::string word = sample_word(lang.bigram, prev, rng);
      const auto& pron = lang.lexicon.entry(word).pronunciation;
      double dur = spec.word_second_per_phoneme * static_cast<double>(pron.size()) +
                   rng.normal(0.0, 0.01);
      dur = std::max(dur, 0.04 * static_cast<double>(pron.size()));
      story.words.tokens.push_back({word, t, t + dur});
      story.sentence_initial.push_back(i == 0);
      const double step = dur / static_cast<double>(pron.size());
      for (std::size_t p = 0; p < pron.size(); ++p) {
        const double on = t + step * static_cast<double>(p);
        const double off = (p + 1 == pron.size()) ? t + dur : t + step * static_cast<double>(p + 1);
        story.phonemes.tokens.push_back({pron[p], on, off});
        bumps.push_back({on, off, rng.uniform(0.6, 1.0)});
      }
      if (i) line += ' ';
      line += word;
      prev = word;
      t += dur;
      if (t >= target_s) done = true;
    }
    story.sentences.push_back(std::move(line));
    t += spec.pause_s;
  }
  t -= spec.pause_s;  // no trailing pause

  // Round duration up to a whole 64 Hz sample so every stream aligns.
  const double duration = std::ceil(t * 64.0) / 64.0;
  story.duration_s = duration;
  story.words.level = speechfeat::TrackLevel::kWord;
  story.words.duration_s = duration;
  story.phonemes.level = speechfeat::TrackLevel::kPhoneme;
  story.phonemes.duration_s = duration;
  story.words.validate();
  story.phonemes.validate();

  // Ground-truth modulator at 64 Hz.
  const std::size_t n64 = static_cast<std::size_t>(std::llround(duration * 64.0));
  story.modulator = MultichannelSignal(1, n64, 64.0);
  for (std::size_t i = 0; i < n64; ++i)
    story.modulator.at(0, i) = detail::eval_bumps(bumps, static_cast<double>(i) / 64.0);

  // Carrier: sum of random-phase sinusoids log-spaced over 150-3500 Hz, a
  // cheap exactly-band-limited stand-in for speech-band noise.
  constexpr std::size_t kComponents = 64;
  std::vector<double> freq(kComponents), phase(kComponents);
  const double lo = std::log(150.0), hi = std::log(3500.0);
  for (std::size_t k = 0; k < kComponents; ++k) {
    freq[k] = std::exp(rng.uniform(lo, hi));
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const std::size_t na = static_cast<std::size_t>(std::llround(duration * spec.audio_fs));
  story.audio = MultichannelSignal(1, na, spec.audio_fs);
  const double norm = std::sqrt(2.0 / static_cast<double>(kComponents));
  for (std::size_t i = 0; i < na; ++i) {
    const double ti = static_cast<double>(i) / spec.audio_fs;
    const double m = detail::eval_bumps(bumps, ti);
    if (m == 0.0) continue;
    double carrier = 0.0;
    for (std::size_t k = 0; k < kComponents; ++k)
      carrier += std::cos(2.0 * std::numbers::pi * freq[k] * ti + phase[k]);
    story.audio.at(0, i) = m * carrier * norm;
  }
  return story;
}

}  // namespace neurotrack::cohortsim
