#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "neurotrack/core/rng.hpp"
#include "neurotrack/speechfeat/alignment.hpp"
#include "neurotrack/speechfeat/features.hpp"
#include "neurotrack/speechfeat/lexicon.hpp"
#include "neurotrack/speechfeat/ngram.hpp"

namespace sf = neurotrack::speechfeat;
using neurotrack::Rng;

namespace {

sf::Lexicon toy_lexicon() {
  sf::Lexicon lex;
  lex.add("cat", {"k", "a", "t"}, 2);
  lex.add("cap", {"k", "a", "p"}, 1);
  lex.add("dog", {"d", "o", "g"}, 1);
  return lex;
}

// Brute-force cohort reference: scan every lexicon entry for each prefix.
struct NaiveCohort {
  std::vector<double> mass;       // mass[i] = cohort mass after i phonemes (mass[0] = total)
  std::vector<double> surprisal;  // per phoneme, bits
  std::vector<double> entropy;    // per phoneme, bits
};

NaiveCohort naive_cohort(const sf::Lexicon& lex, const std::vector<std::string>& pron) {
  NaiveCohort out;
  for (std::size_t len = 0; len <= pron.size(); ++len) {
    double mass = 0.0;
    double h = 0.0;
    std::vector<double> counts;
    for (const auto& [word, e] : lex.entries()) {
      if (e.pronunciation.size() < len) continue;
      bool match = true;
      for (std::size_t i = 0; i < len; ++i)
        if (e.pronunciation[i] != pron[i]) {
          match = false;
          break;
        }
      if (match) {
        mass += static_cast<double>(e.count);
        counts.push_back(static_cast<double>(e.count));
      }
    }
    out.mass.push_back(mass);
    if (len > 0) {
      out.surprisal.push_back(-std::log2(out.mass[len] / out.mass[len - 1]));
      for (double c : counts) {
        const double q = c / mass;
        h -= q * std::log2(q);
      }
      out.entropy.push_back(h);
    }
  }
  return out;
}

// Random lexicon with possibly shared prefixes and homophones.
sf::Lexicon random_lexicon(Rng& rng, std::size_t n_words, bool prefix_free) {
  static const std::vector<std::string> phones = {"p", "t", "k", "b", "d", "g", "a", "o"};
  sf::Lexicon lex;
  std::set<std::vector<std::string>> used;
  for (std::size_t w = 0; w < n_words; ++w) {
    std::vector<std::string> pron;
    if (prefix_free) {
      do {
        pron.clear();
        for (int i = 0; i < 3; ++i) pron.push_back(phones[rng.below(phones.size())]);
      } while (used.count(pron));
      used.insert(pron);
    } else {
      const std::size_t len = 1 + rng.below(5);
      for (std::size_t i = 0; i < len; ++i) pron.push_back(phones[rng.below(phones.size())]);
    }
    lex.add("w" + std::to_string(w), pron, 1 + rng.below(20));
  }
  return lex;
}

}  // namespace

TEST(CohortStats, SingleWordLexiconAllZeros) {
  sf::Lexicon lex;
  lex.add("hello", {"h", "e", "l", "o"}, 7);
  sf::CohortModel model(lex);
  const auto values = sf::cohort_stats(model, lex, "hello");
  ASSERT_EQ(values.size(), 4u);
  for (const auto& v : values) {
    EXPECT_DOUBLE_EQ(v.surprisal_bits, 0.0);
    EXPECT_DOUBLE_EQ(v.entropy_bits, 0.0);
  }
}

TEST(CohortStats, ToyLexiconHandValues) {
  const auto lex = toy_lexicon();
  sf::CohortModel model(lex);
  const auto values = sf::cohort_stats(model, lex, "cat");
  ASSERT_EQ(values.size(), 3u);
  // /k/: cohort {cat:2, cap:1} out of mass 4.
  EXPECT_NEAR(values[0].surprisal_bits, -std::log2(3.0 / 4.0), 1e-12);
  const double h_kc = std::log2(3.0) - 2.0 / 3.0;  // {2,1} distribution
  EXPECT_NEAR(values[0].entropy_bits, h_kc, 1e-12);
  // /a/: cohort unchanged.
  EXPECT_NEAR(values[1].surprisal_bits, 0.0, 1e-12);
  EXPECT_NEAR(values[1].entropy_bits, h_kc, 1e-12);
  // /t/: cohort narrows to {cat}.
  EXPECT_NEAR(values[2].surprisal_bits, -std::log2(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(values[2].surprisal_bits, 0.585, 5e-4);
  EXPECT_DOUBLE_EQ(values[2].entropy_bits, 0.0);
}

TEST(CohortStats, MatchesBruteForceEnumerationOnRandomLexicons) {
  Rng rng(20250811);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lex = random_lexicon(rng, 10 + rng.below(41), /*prefix_free=*/false);
    sf::CohortModel model(lex);
    for (const auto& [word, e] : lex.entries()) {
      const auto got = model.word_values(e.pronunciation);
      const auto ref = naive_cohort(lex, e.pronunciation);
      ASSERT_EQ(got.size(), ref.surprisal.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        // Masses are integer sums, so surprisal must agree bit-for-bit.
        EXPECT_DOUBLE_EQ(got[i].surprisal_bits, ref.surprisal[i]) << word << " phoneme " << i;
        EXPECT_NEAR(got[i].entropy_bits, ref.entropy[i], 1e-12) << word << " phoneme " << i;
      }
    }
  }
}

TEST(CohortStats, ChainRuleTelescopesToFinalCohortMass) {
  Rng rng(77001);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lex = random_lexicon(rng, 30, /*prefix_free=*/false);
    sf::CohortModel model(lex);
    const double total = static_cast<double>(lex.total_count());
    for (const auto& [word, e] : lex.entries()) {
      const auto values = model.word_values(e.pronunciation);
      double sum = 0.0;
      for (const auto& v : values) sum += v.surprisal_bits;
      const double final_mass = model.prefix_mass(e.pronunciation);
      EXPECT_NEAR(sum, -std::log2(final_mass / total), 1e-9);
      // Final mass includes at least this word, so the sum can never exceed
      // the word's own information content.
      EXPECT_LE(sum, -std::log2(static_cast<double>(e.count) / total) + 1e-9);
    }
  }
}

TEST(CohortStats, ChainRuleEqualityOnPrefixFreeLexicons) {
  Rng rng(77002);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lex = random_lexicon(rng, 40, /*prefix_free=*/true);
    sf::CohortModel model(lex);
    const double total = static_cast<double>(lex.total_count());
    for (const auto& [word, e] : lex.entries()) {
      const auto values = model.word_values(e.pronunciation);
      double sum = 0.0;
      for (const auto& v : values) sum += v.surprisal_bits;
      EXPECT_NEAR(sum, -std::log2(static_cast<double>(e.count) / total), 1e-9) << word;
    }
  }
}

TEST(CohortStats, EntropyNonIncreasingOnPrefixFreeLexicons) {
  Rng rng(77003);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lex = random_lexicon(rng, 40, /*prefix_free=*/true);
    sf::CohortModel model(lex);
    for (const auto& [word, e] : lex.entries()) {
      const auto values = model.word_values(e.pronunciation);
      for (std::size_t i = 1; i < values.size(); ++i)
        EXPECT_LE(values[i].entropy_bits, values[i - 1].entropy_bits + 1e-9) << word;
    }
  }
}

TEST(CohortStats, UnknownWordAndPrefixThrow) {
  const auto lex = toy_lexicon();
  sf::CohortModel model(lex);
  EXPECT_THROW(sf::cohort_stats(model, lex, "cobra"), neurotrack::InvalidArgument);
  EXPECT_THROW(model.word_values({"k", "o"}), neurotrack::InvalidArgument);
  EXPECT_THROW(model.word_values({}), neurotrack::InvalidArgument);
}

TEST(Bigram, OneWordRepeatedGivesZeroBits) {
  sf::BigramModel model(0.0);
  model.add_corpus_line("a a a a");
  sf::Lexicon lex;
  lex.add("a", {"a"}, 4);
  const auto values = sf::word_values(model, lex, {"a", "a", "a"});
  ASSERT_EQ(values.size(), 3u);
  for (const auto& v : values) {
    EXPECT_NEAR(v.frequency_bits, 0.0, 1e-12);
    EXPECT_NEAR(v.surprisal_bits, 0.0, 1e-12);
  }
}

TEST(Bigram, ToyCorpusHandCountedTable) {
  sf::BigramModel model(0.0);
  model.add_corpus_line("a b a b");
  // c(a,b) = 2 and c(a,.) = 2, so p(b|a) = 1.
  EXPECT_NEAR(model.surprisal_bits("a", "b"), 0.0, 1e-12);
  // c(<s>,a) = 1 over one sentence start.
  EXPECT_NEAR(model.probability(sf::kSentenceStart, "a"), 1.0, 1e-12);
  sf::Lexicon lex;
  lex.add("a", {"a"}, 2);
  lex.add("b", {"b"}, 2);
  EXPECT_NEAR(lex.frequency_bits("a"), 1.0, 1e-12);
}

TEST(Bigram, SmoothedDistributionSumsToOne) {
  sf::BigramModel model(0.1);
  model.add_corpus_line("the cat sat on the mat");
  model.add_corpus_line("the dog sat");
  std::vector<std::string> contexts = {"the", "sat", sf::kSentenceStart, "zebra"};
  for (const auto& ctx : contexts) {
    double sum = 0.0;
    for (const auto& [w, c] : model.vocabulary()) sum += model.probability(ctx, w);
    sum += model.probability(ctx, sf::kUnknownWord);
    EXPECT_NEAR(sum, 1.0, 1e-9) << "context " << ctx;
  }
}

TEST(Bigram, OovQueryMapsToUnknown) {
  sf::BigramModel model(0.5);
  model.add_corpus_line("a b");
  EXPECT_DOUBLE_EQ(model.probability("a", "zebra"), model.probability("a", sf::kUnknownWord));
  // Unseen context with k = 0 has no distribution.
  sf::BigramModel hard(0.0);
  hard.add_corpus_line("a b");
  EXPECT_THROW(hard.probability("zebra", "a"), neurotrack::RuntimeError);
}

TEST(Bigram, SentenceInitialFlagsConditionOnStart) {
  sf::BigramModel model(0.1);
  model.add_corpus_line("a b");
  model.add_corpus_line("b a");
  sf::Lexicon lex;
  lex.add("a", {"a"}, 2);
  lex.add("b", {"b"}, 2);
  const std::vector<std::string> words = {"a", "b", "b", "a"};
  const auto flagged =
      sf::word_values(model, lex, words, std::vector<bool>{true, false, true, false});
  EXPECT_NEAR(flagged[2].surprisal_bits, model.surprisal_bits(sf::kSentenceStart, "b"), 1e-12);
  EXPECT_NEAR(flagged[3].surprisal_bits, model.surprisal_bits("b", "a"), 1e-12);
  EXPECT_THROW(
      sf::word_values(model, lex, words, std::vector<bool>{false, false, false, false}),
      neurotrack::InvalidArgument);
}

namespace {

sf::AlignmentTrack two_token_track() {
  sf::AlignmentTrack track;
  track.level = sf::TrackLevel::kWord;
  track.duration_s = 1.5;
  track.tokens = {{"x", 0.5, 0.9}, {"y", 1.0, 1.4}};
  return track;
}

}  // namespace

TEST(OnsetTrain, ImpulsesAtRoundedSamples) {
  const auto track = two_token_track();
  const auto stream = sf::onset_train(track);
  ASSERT_EQ(stream.samples(), 96u);  // 1.5 s at 64 Hz
  EXPECT_DOUBLE_EQ(stream.at(0, 32), 1.0);
  EXPECT_DOUBLE_EQ(stream.at(0, 64), 1.0);
  double sum = 0.0;
  for (std::size_t t = 0; t < stream.samples(); ++t) sum += stream.at(0, t);
  EXPECT_DOUBLE_EQ(sum, 2.0);
}

TEST(OnsetTrain, TiesRoundAwayFromZero) {
  sf::AlignmentTrack track;
  track.duration_s = 1.0;
  track.tokens = {{"x", 32.5 / 64.0, 0.9}};  // exactly half a sample
  const auto stream = sf::onset_train(track);
  EXPECT_DOUBLE_EQ(stream.at(0, 33), 1.0);
  EXPECT_DOUBLE_EQ(stream.at(0, 32), 0.0);
}

TEST(OnsetTrain, SumCountsDistinctOnsetSamples) {
  Rng rng(550);
  for (int trial = 0; trial < 20; ++trial) {
    sf::AlignmentTrack track;
    track.duration_s = 30.0;
    double t = 0.0;
    std::set<std::int64_t> samples;
    const std::size_t n = 5 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) {
      t += 0.01 + 0.5 * rng.uniform();
      if (t >= track.duration_s - 0.1) break;
      track.tokens.push_back({"w", t, t + 0.005});
      samples.insert(std::llround(t * 64.0));
    }
    const auto stream = sf::onset_train(track);
    double sum = 0.0;
    for (std::size_t s = 0; s < stream.samples(); ++s) sum += stream.at(0, s);
    EXPECT_DOUBLE_EQ(sum, static_cast<double>(samples.size()));
  }
}

TEST(OnsetTrain, EmptyTrackAllZeros) {
  sf::AlignmentTrack track;
  track.duration_s = 2.0;
  const auto stream = sf::onset_train(track);
  ASSERT_EQ(stream.samples(), 128u);
  for (std::size_t t = 0; t < stream.samples(); ++t) EXPECT_DOUBLE_EQ(stream.at(0, t), 0.0);
}

TEST(EncodeLinguistic, OnesReducesToOnsetTrainBitExact) {
  Rng rng(551);
  sf::AlignmentTrack track;
  track.duration_s = 10.0;
  double t = 0.1;
  while (t < 9.5) {
    track.tokens.push_back({"w", t, t + 0.05});
    t += 0.05 + rng.uniform();
  }
  const auto onsets = sf::onset_train(track);
  const auto encoded =
      sf::encode_linguistic(track, std::vector<double>(track.tokens.size(), 1.0));
  ASSERT_EQ(onsets.samples(), encoded.samples());
  for (std::size_t s = 0; s < onsets.samples(); ++s)
    EXPECT_EQ(onsets.at(0, s), encoded.at(0, s));
}

TEST(EncodeLinguistic, ValuesLandOnOnsetSamples) {
  const auto track = two_token_track();
  const auto stream = sf::encode_linguistic(track, {0.585, 0.0});
  EXPECT_DOUBLE_EQ(stream.at(0, 32), 0.585);
  EXPECT_DOUBLE_EQ(stream.at(0, 64), 0.0);
  EXPECT_DOUBLE_EQ(stream.at(0, 33), 0.0);
}

TEST(EncodeLinguistic, RejectsBadInputs) {
  const auto track = two_token_track();
  EXPECT_THROW(sf::encode_linguistic(track, {1.0}), neurotrack::InvalidArgument);
  EXPECT_THROW(sf::encode_linguistic(track, {1.0, -0.5}), neurotrack::InvalidArgument);
  EXPECT_THROW(sf::encode_linguistic(track, {1.0, 1.0}, 128.0), neurotrack::InvalidArgument);
  sf::AlignmentTrack bad = track;
  bad.tokens.push_back({"z", 1.6, 1.7});  // beyond duration
  EXPECT_THROW(sf::onset_train(bad), neurotrack::InvalidArgument);
}

TEST(Alignment, TsvRoundTripBothLevels) {
  const auto dir = std::filesystem::temp_directory_path() / "ntrk_speechfeat";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tracks.tsv";

  sf::AlignmentTrack words;
  words.level = sf::TrackLevel::kWord;
  words.duration_s = 2.0;
  words.tokens = {{"cat", 0.0, 0.75}, {"dog", 0.75, 1.5}};
  sf::AlignmentTrack phones;
  phones.level = sf::TrackLevel::kPhoneme;
  phones.duration_s = 2.0;
  phones.tokens = {{"k", 0.0, 0.25}, {"a", 0.25, 0.5}, {"t", 0.5, 0.75},
                   {"d", 0.75, 1.0}, {"o", 1.0, 1.25}, {"g", 1.25, 1.5}};
  sf::write_alignment_tracks({words, phones}, path);

  const auto words2 = sf::read_alignment_track(path, sf::TrackLevel::kWord, 2.0);
  const auto phones2 = sf::read_alignment_track(path, sf::TrackLevel::kPhoneme, 2.0);
  ASSERT_EQ(words2.tokens.size(), 2u);
  ASSERT_EQ(phones2.tokens.size(), 6u);
  EXPECT_EQ(words2.tokens[1].symbol, "dog");
  EXPECT_DOUBLE_EQ(phones2.tokens[3].onset_s, 0.75);
}

TEST(Alignment, ValidateRejectsDisorderedOnsets) {
  sf::AlignmentTrack track;
  track.duration_s = 2.0;
  track.tokens = {{"a", 1.0, 1.2}, {"b", 0.5, 0.8}};
  EXPECT_THROW(track.validate(), neurotrack::InvalidArgument);
  sf::AlignmentTrack beyond;
  beyond.duration_s = 1.0;
  beyond.tokens = {{"a", 0.5, 1.5}};
  EXPECT_THROW(beyond.validate(), neurotrack::InvalidArgument);
}

TEST(Lexicon, TsvRoundTripAndDuplicateRejection) {
  const auto dir = std::filesystem::temp_directory_path() / "ntrk_speechfeat";
  std::filesystem::create_directories(dir);
  const auto path = dir / "lexicon.tsv";
  auto lex = toy_lexicon();
  sf::write_lexicon(lex, path);
  const auto lex2 = sf::read_lexicon(path);
  EXPECT_EQ(lex2.size(), 3u);
  EXPECT_EQ(lex2.total_count(), 4u);
  EXPECT_EQ(lex2.entry("cat").pronunciation, (std::vector<std::string>{"k", "a", "t"}));
  EXPECT_THROW(lex.add("cat", {"k"}, 1), neurotrack::InvalidArgument);
}

TEST(Features, BuildLinguisticFeaturesWiresValuesOntoOnsets) {
  const auto lex = toy_lexicon();
  sf::CohortModel cohort(lex);
  sf::BigramModel bigram(0.1);
  bigram.add_corpus_line("cat dog");
  bigram.add_corpus_line("dog cat");

  sf::LinguisticTracks tracks;
  tracks.words.level = sf::TrackLevel::kWord;
  tracks.words.duration_s = 2.0;
  tracks.words.tokens = {{"cat", 0.0, 0.75}, {"dog", 1.0, 1.75}};
  tracks.phonemes.level = sf::TrackLevel::kPhoneme;
  tracks.phonemes.duration_s = 2.0;
  tracks.phonemes.tokens = {{"k", 0.0, 0.25},  {"a", 0.25, 0.5}, {"t", 0.5, 0.75},
                            {"d", 1.0, 1.25},  {"o", 1.25, 1.5}, {"g", 1.5, 1.75}};

  const auto streams = sf::build_linguistic_features(tracks, lex, cohort, bigram);
  ASSERT_EQ(streams.size(), 6u);
  std::map<std::string, const sf::FeatureStream*> by_name;
  for (const auto& s : streams) by_name[s.name] = &s;

  ASSERT_TRUE(by_name.count("word_frequency"));
  EXPECT_NEAR(by_name.at("word_frequency")->signal.at(0, 0), lex.frequency_bits("cat"), 1e-12);
  EXPECT_NEAR(by_name.at("word_frequency")->signal.at(0, 64), lex.frequency_bits("dog"), 1e-12);

  const auto cat_values = sf::cohort_stats(cohort, lex, "cat");
  EXPECT_NEAR(by_name.at("phoneme_surprisal")->signal.at(0, 32),
              cat_values[2].surprisal_bits, 1e-12);  // /t/ at 0.5 s
  EXPECT_NEAR(by_name.at("cohort_entropy")->signal.at(0, 16), cat_values[1].entropy_bits,
              1e-12);  // /a/ at 0.25 s

  EXPECT_DOUBLE_EQ(by_name.at("word_onsets")->signal.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(by_name.at("phoneme_onsets")->signal.at(0, 96), 1.0);  // /g/ at 1.5 s

  // Track symbols must match lexicon pronunciations.
  auto broken = tracks;
  broken.phonemes.tokens[2].symbol = "p";
  EXPECT_THROW(sf::build_linguistic_features(broken, lex, cohort, bigram),
               neurotrack::InvalidArgument);
}

TEST(Features, CanonicalNameListHasElevenEntries) {
  const auto& names = sf::feature_names();
  EXPECT_EQ(names.size(), 11u);
  std::set<std::string> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), 11u);
}
