#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neurotrack/cohortsim/forward.hpp"
#include "neurotrack/cohortsim/language.hpp"
#include "neurotrack/cohortsim/story.hpp"
#include "neurotrack/core/parallel.hpp"
#include "neurotrack/signal/container.hpp"

namespace neurotrack::cohortsim {

// The seven stimulus streams that drive the forward model: the ground-truth
// envelope plus the six discrete linguistic/segmentation trains.
inline const std::vector<std::string>& generative_feature_names() {
  static const std::vector<std::string> names = {
      "env_broad",      "word_onsets",       "phoneme_onsets", "word_frequency",
      "word_surprisal", "phoneme_surprisal", "cohort_entropy"};
  return names;
}

enum class Group { kControl, kPatient };

inline std::string to_string(Group g) { return g == Group::kControl ? "control" : "patient"; }

struct GroupAges {
  double mean = 72.0;
  double std = 7.0;
};

struct CohortSpec {
  std::size_t n_controls = 22;
  std::size_t n_patients = 26;
  GroupAges control_ages{72.0, 7.0};
  GroupAges patient_ages{72.0, 15.0};
  double story_minutes = 20.0;
  std::map<std::string, double> control_gains;  // per generative feature
  std::map<std::string, double> patient_gains;  // <= control_gains entrywise
  double noise_sigma = 1.0;
  double patient_noise_scale = 1.0;  // optional additive-noise inflation
  double trf_jitter = 0.15;
  std::size_t n_channels = 64;
  std::size_t language_words = 150;
  std::size_t language_sentences = 1500;
  double add_k = 0.1;
  std::uint64_t seed = 1;
  // Shared across cohorts so different seeds describe new subjects and a new
  // story, not a new species or a new language.
  std::uint64_t physiology_seed = 0x9e3779b97f4a7c15ull;
  std::uint64_t language_seed = 777000;

  void validate() const {
    detail::require(n_controls >= 2 && n_patients >= 2, "CohortSpec: each group needs >= 2 subjects");
    detail::require(story_minutes > 0.0, "CohortSpec: story_minutes must be positive");
    detail::require(noise_sigma > 0.0, "CohortSpec: noise_sigma must be positive");
    detail::require(patient_noise_scale >= 1.0, "CohortSpec: patient noise scale must be >= 1");
    detail::require(n_channels >= 2, "CohortSpec: need at least two channels");
    for (const auto& name : generative_feature_names()) {
      const auto c = control_gains.find(name);
      const auto p = patient_gains.find(name);
      detail::require(c != control_gains.end() && p != patient_gains.end(),
                      "CohortSpec: missing gain for feature " + name);
      detail::require(c->second >= 0.0 && p->second >= 0.0, "CohortSpec: gains must be >= 0");
      detail::require(p->second <= c->second + 1e-12,
                      "CohortSpec: patient gain exceeds control gain for " + name);
    }
  }
};

// Default gains by feature class (acoustic / segmentation / linguistic).
inline std::map<std::string, double> default_control_gains() {
  return {{"env_broad", 1.0},          {"word_onsets", 0.55},     {"phoneme_onsets", 0.55},
          {"word_frequency", 0.45},    {"word_surprisal", 0.45},  {"phoneme_surprisal", 0.45},
          {"cohort_entropy", 0.45}};
}

inline std::map<std::string, double> scaled_gains(const std::map<std::string, double>& gains,
                                                  double factor) {
  detail::require(factor >= 0.0, "scaled_gains: factor must be >= 0");
  auto out = gains;
  for (auto& [k, v] : out) v *= factor;
  return out;
}

// Canonical spec for a deficit scenario: patients carry `deficit` times the
// control gain on every stream. deficit = 1 is the null cohort.
inline CohortSpec make_deficit_spec(double deficit, std::uint64_t seed,
                                    double story_minutes = 20.0) {
  detail::require(deficit >= 0.0 && deficit <= 1.0, "make_deficit_spec: deficit must be in [0, 1]");
  CohortSpec spec;
  spec.control_gains = default_control_gains();
  spec.patient_gains = scaled_gains(spec.control_gains, deficit);
  spec.seed = seed;
  spec.story_minutes = story_minutes;
  return spec;
}

struct SubjectRecord {
  std::string id;
  Group group = Group::kControl;
  double age = 0.0;
  double noise_sigma = 0.0;
  MultichannelSignal eeg;  // n_channels x story duration at 64 Hz
};

// Story, language, and stimulus features are shared by every subject in the
// cohort; subjects differ in TRFs, gains (via group), and noise.
struct Cohort {
  CohortSpec spec;
  Language language;
  Story story;
  std::vector<speechfeat::FeatureStream> gen_features;  // the 7 driving streams
  std::vector<SubjectRecord> subjects;                  // controls first, then patients
};

namespace detail {

inline constexpr std::uint64_t kStoryStream = 0x5701;
inline constexpr std::uint64_t kSubjectStream = 0x5b00;

inline std::string subject_id(Group g, std::size_t index_in_group) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%c%02zu", g == Group::kControl ? 'c' : 'p', index_in_group + 1);
  return buf;
}

}  // namespace detail

// Build the seven generative streams for a story. The envelope stream is the
// ground-truth modulator, not an estimate extracted from audio.
inline std::vector<speechfeat::FeatureStream> build_generative_features(const Story& story,
                                                                        const Language& lang) {
  const speechfeat::CohortModel cohort_model(lang.lexicon);
  speechfeat::LinguisticTracks tracks{story.words, story.phonemes};
  auto streams = speechfeat::build_linguistic_features(tracks, lang.lexicon, cohort_model,
                                                       lang.bigram, story.sentence_initial);
  std::vector<speechfeat::FeatureStream> out;
  out.push_back({"env_broad", story.modulator});
  for (auto& s : streams) out.push_back(std::move(s));
  neurotrack::detail::ensure(out.size() == generative_feature_names().size(),
                             "build_generative_features: stream count mismatch");
  return out;
}

// Convenience overload matching the forward-model contract directly: base
// TRFs and the noise stream both derive from trf_seed, so regenerating with
// different gains reuses identical kernels and noise.
inline MultichannelSignal gen_subject_eeg(const std::vector<speechfeat::FeatureStream>& features,
                                          const std::map<std::string, double>& gains,
                                          std::uint64_t trf_seed, double noise_sigma,
                                          std::size_t n_channels = 64) {
  std::vector<std::string> names;
  for (const auto& f : features) names.push_back(f.name);
  const auto bank = make_base_trfs(trf_seed, names, n_channels);
  Rng noise_rng(derive_seed(trf_seed, 1));
  return gen_subject_eeg(features, gains, bank, noise_sigma, n_channels, noise_rng);
}

// Deterministic in spec alone. Subject RNG streams are derived independently
// from the seed, so parallel and serial generation agree bit for bit.
inline Cohort gen_cohort(const CohortSpec& spec, std::size_t jobs = 1) {
  spec.validate();
  Cohort cohort;
  cohort.spec = spec;
  cohort.language = make_language({spec.language_words, spec.language_sentences, spec.add_k,
                                   spec.language_seed});
  StorySpec story_spec;
  story_spec.minutes = spec.story_minutes;
  story_spec.seed = derive_seed(spec.seed, detail::kStoryStream);
  cohort.story = gen_story(cohort.language, story_spec);
  cohort.gen_features = build_generative_features(cohort.story, cohort.language);

  const auto base_trfs =
      make_base_trfs(spec.physiology_seed, generative_feature_names(), spec.n_channels);

  const std::size_t total = spec.n_controls + spec.n_patients;
  cohort.subjects.resize(total);
  parallel_for(total, jobs, [&](std::size_t i) {
    const bool is_control = i < spec.n_controls;
    SubjectRecord rec;
    rec.group = is_control ? Group::kControl : Group::kPatient;
    rec.id = detail::subject_id(rec.group, is_control ? i : i - spec.n_controls);
    Rng rng(derive_seed(spec.seed, detail::kSubjectStream + i));
    const GroupAges& ages = is_control ? spec.control_ages : spec.patient_ages;
    rec.age = std::clamp(rng.normal(ages.mean, ages.std), 25.0, 95.0);
    rec.noise_sigma = spec.noise_sigma * rng.uniform(0.9, 1.1) *
                      (is_control ? 1.0 : spec.patient_noise_scale);
    const auto trfs = jitter_trfs(base_trfs, spec.trf_jitter, rng);
    const auto& gains = is_control ? spec.control_gains : spec.patient_gains;
    rec.eeg = gen_subject_eeg(cohort.gen_features, gains, trfs, rec.noise_sigma, spec.n_channels,
                              rng);
    cohort.subjects[i] = std::move(rec);
  });
  return cohort;
}

// --- directory serialization ----------------------------------------------

namespace detail {

inline nlohmann::json gains_to_json(const std::map<std::string, double>& g) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : g) j[k] = v;
  return j;
}

inline std::map<std::string, double> gains_from_json(const nlohmann::json& j) {
  std::map<std::string, double> g;
  for (auto it = j.begin(); it != j.end(); ++it) g[it.key()] = it.value().get<double>();
  return g;
}

}  // namespace detail

inline nlohmann::json to_json(const CohortSpec& s) {
  return {{"n_controls", s.n_controls},
          {"n_patients", s.n_patients},
          {"control_ages", {{"mean", s.control_ages.mean}, {"std", s.control_ages.std}}},
          {"patient_ages", {{"mean", s.patient_ages.mean}, {"std", s.patient_ages.std}}},
          {"story_minutes", s.story_minutes},
          {"control_gains", detail::gains_to_json(s.control_gains)},
          {"patient_gains", detail::gains_to_json(s.patient_gains)},
          {"noise_sigma", s.noise_sigma},
          {"patient_noise_scale", s.patient_noise_scale},
          {"trf_jitter", s.trf_jitter},
          {"n_channels", s.n_channels},
          {"language_words", s.language_words},
          {"language_sentences", s.language_sentences},
          {"add_k", s.add_k},
          {"seed", s.seed},
          {"physiology_seed", s.physiology_seed},
          {"language_seed", s.language_seed}};
}

inline CohortSpec cohort_spec_from_json(const nlohmann::json& j) {
  CohortSpec s;
  s.n_controls = j.at("n_controls").get<std::size_t>();
  s.n_patients = j.at("n_patients").get<std::size_t>();
  s.control_ages = {j.at("control_ages").at("mean").get<double>(),
                    j.at("control_ages").at("std").get<double>()};
  s.patient_ages = {j.at("patient_ages").at("mean").get<double>(),
                    j.at("patient_ages").at("std").get<double>()};
  s.story_minutes = j.at("story_minutes").get<double>();
  s.control_gains = detail::gains_from_json(j.at("control_gains"));
  s.patient_gains = detail::gains_from_json(j.at("patient_gains"));
  s.noise_sigma = j.at("noise_sigma").get<double>();
  s.patient_noise_scale = j.at("patient_noise_scale").get<double>();
  s.trf_jitter = j.at("trf_jitter").get<double>();
  s.n_channels = j.at("n_channels").get<std::size_t>();
  s.language_words = j.at("language_words").get<std::size_t>();
  s.language_sentences = j.at("language_sentences").get<std::size_t>();
  s.add_k = j.at("add_k").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.physiology_seed = j.at("physiology_seed").get<std::uint64_t>();
  s.language_seed = j.at("language_seed").get<std::uint64_t>();
  return s;
}

// Layout: cohort.json, lexicon.tsv, corpus.txt, story.txt, story_tracks.tsv,
// audio.ntrk, modulator.ntrk, subjects/<id>.ntrk.
inline void write_cohort(const Cohort& cohort, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "subjects");

  nlohmann::json j;
  j["format"] = "neurotrack-cohort-v1";
  j["spec"] = to_json(cohort.spec);
  j["story_duration_s"] = cohort.story.duration_s;
  j["subjects"] = nlohmann::json::array();
  for (const auto& s : cohort.subjects) {
    j["subjects"].push_back({{"id", s.id},
                             {"group", to_string(s.group)},
                             {"age", s.age},
                             {"noise_sigma", s.noise_sigma},
                             {"eeg", "subjects/" + s.id + ".ntrk"}});
  }
  std::ofstream out(dir / "cohort.json");
  out << j.dump(2) << '\n';
  neurotrack::detail::ensure(out.good(), "write_cohort: cannot write cohort.json");

  speechfeat::write_lexicon(cohort.language.lexicon, dir / "lexicon.tsv");
  {
    std::ofstream corpus(dir / "corpus.txt");
    for (const auto& line : cohort.language.corpus_lines) corpus << line << '\n';
    neurotrack::detail::ensure(corpus.good(), "write_cohort: cannot write corpus.txt");
    std::ofstream text(dir / "story.txt");
    for (const auto& line : cohort.story.sentences) text << line << '\n';
    neurotrack::detail::ensure(text.good(), "write_cohort: cannot write story.txt");
  }
  speechfeat::write_alignment_tracks({cohort.story.words, cohort.story.phonemes},
                                     dir / "story_tracks.tsv");
  write_signal(cohort.story.audio, dir / "audio.ntrk");
  write_signal(cohort.story.modulator, dir / "modulator.ntrk");
  for (const auto& s : cohort.subjects) write_signal(s.eeg, dir / "subjects" / (s.id + ".ntrk"));
}

// Spec, language, story, and generative features — everything the subjects
// share. Subject EEG stays on disk; `subjects` is left empty.
inline Cohort read_cohort_shared(const std::filesystem::path& dir) {
  std::ifstream in(dir / "cohort.json");
  neurotrack::detail::require(in.good(), "read_cohort: missing cohort.json in " + dir.string());
  nlohmann::json j = nlohmann::json::parse(in);
  neurotrack::detail::require(j.at("format") == "neurotrack-cohort-v1",
                              "read_cohort: unknown format");

  Cohort cohort;
  cohort.spec = cohort_spec_from_json(j.at("spec"));
  cohort.language.add_k = cohort.spec.add_k;
  cohort.language.lexicon = speechfeat::read_lexicon(dir / "lexicon.tsv");
  cohort.language.bigram = speechfeat::read_bigram_corpus(dir / "corpus.txt", cohort.spec.add_k);
  {
    std::ifstream corpus(dir / "corpus.txt");
    std::string line;
    while (std::getline(corpus, line)) cohort.language.corpus_lines.push_back(line);
  }

  Story& story = cohort.story;
  story.duration_s = j.at("story_duration_s").get<double>();
  story.words = speechfeat::read_alignment_track(dir / "story_tracks.tsv",
                                                 speechfeat::TrackLevel::kWord, story.duration_s);
  story.phonemes = speechfeat::read_alignment_track(
      dir / "story_tracks.tsv", speechfeat::TrackLevel::kPhoneme, story.duration_s);
  story.audio = read_signal(dir / "audio.ntrk");
  story.modulator = read_signal(dir / "modulator.ntrk");
  {
    std::ifstream text(dir / "story.txt");
    std::string line;
    std::size_t cursor = 0;
    while (std::getline(text, line)) {
      story.sentences.push_back(line);
      std::istringstream ss(line);
      std::string word;
      bool first = true;
      while (ss >> word) {
        neurotrack::detail::require(cursor < story.words.tokens.size() &&
                                        story.words.tokens[cursor].symbol == word,
                                    "read_cohort: story text does not match word track");
        story.sentence_initial.push_back(first);
        first = false;
        ++cursor;
      }
    }
    neurotrack::detail::require(cursor == story.words.tokens.size(),
                                "read_cohort: story text does not cover word track");
  }
  cohort.gen_features = build_generative_features(story, cohort.language);
  return cohort;
}

inline Cohort read_cohort(const std::filesystem::path& dir) {
  Cohort cohort = read_cohort_shared(dir);
  std::ifstream in(dir / "cohort.json");
  nlohmann::json j = nlohmann::json::parse(in);
  for (const auto& js : j.at("subjects")) {
    SubjectRecord rec;
    rec.id = js.at("id").get<std::string>();
    rec.group = js.at("group").get<std::string>() == "control" ? Group::kControl : Group::kPatient;
    rec.age = js.at("age").get<double>();
    rec.noise_sigma = js.at("noise_sigma").get<double>();
    rec.eeg = read_signal(dir / js.at("eeg").get<std::string>());
    cohort.subjects.push_back(std::move(rec));
  }
  return cohort;
}

}  // namespace neurotrack::cohortsim
