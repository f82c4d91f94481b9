#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "neurotrack/cohortsim/cohort.hpp"
#include "neurotrack/core/error.hpp"
#include "neurotrack/speechfeat/features.hpp"

namespace neurotrack::pipeline {

namespace detail {
using neurotrack::detail::ensure;
using neurotrack::detail::require;
}  // namespace detail

inline constexpr const char* kToolVersion = "0.1.0";

// Per-architecture network/training hyperparameters.
struct NetHyperparams {
  std::size_t spatial_filters = 8;
  std::size_t temporal_filters = 8;
  std::size_t kernel_width = 3;
  std::vector<std::size_t> dilations = {1, 3, 9};
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
};

// The whole experiment, parsed from a flat dotted-key config file. Every
// field here is semantically meaningful and enters the config hash, except
// out_dir and jobs, which change where/how fast results appear but never
// what they contain.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out_dir = "runs/exp";

  // clinical cohort
  std::size_t controls = 22;
  std::size_t patients = 26;
  double deficit = 0.6;  // patient gain factor
  double story_minutes = 20.0;
  double noise_sigma = 1.0;
  double patient_noise_scale = 1.0;
  double trf_jitter = 0.15;
  std::size_t channels = 64;
  double control_age_mean = 72.0, control_age_std = 7.0;
  double patient_age_mean = 72.0, patient_age_std = 15.0;
  std::uint64_t physiology_seed = 0x9e3779b97f4a7c15ull;
  std::uint64_t language_seed = 777000;
  std::size_t language_words = 150;
  std::size_t language_sentences = 1500;
  std::map<std::string, double> gains = cohortsim::default_control_gains();

  // dsp
  std::size_t filter_order = 2000;  // at the 512 Hz reference rate

  // features
  double add_k = 0.1;
  std::string lexicon_path;  // optional external lexicon; empty = cohort's own
  std::string corpus_path;   // optional external corpus

  // match-mismatch windows
  double window_short_s = 5.0;  // envelopes and phoneme-level features
  double window_long_s = 10.0;  // word-level features
  double offset_s = 1.0;

  // pretraining cohort (healthy gains, disjoint subjects/story)
  std::size_t train_controls = 8;
  std::size_t train_patients = 8;
  double train_story_minutes = 0.0;  // 0 = same as story_minutes

  NetHyperparams nn_single;
  NetHyperparams nn_dual;

  // classification
  double q = 0.05;
  std::size_t inner_folds = 5;
  bool prune = false;
  std::vector<double> c_grid = {0.01, 0.046415888336127774, 0.21544346900318834, 1.0,
                                4.6415888336127775, 21.544346900318832, 100.0};
  std::vector<double> gamma_scale = {0.1, 1.0, 10.0};

  // recording-length sweep: grid is 1..sweep_minutes step 1
  std::size_t sweep_minutes = 20;

  double effective_train_minutes() const {
    return train_story_minutes > 0.0 ? train_story_minutes : story_minutes;
  }

  void validate() const;
  std::string canonical_text() const;
  std::uint64_t semantic_hash() const;
  std::string semantic_hash_hex() const;
};

// One Table-1 row: which feature drives which architecture, against which
// EEG band, and (for dual models) which onset train rides along.
struct ModelSpec {
  std::string feature;
  std::string architecture;  // "single" | "dual"
  std::string eeg_band;
  std::string feature_b;  // empty for single-feature models
  double window_s = 0.0;
};

// The paper's Table 1: five band envelopes on the single-feature model,
// segmentation/linguistic features on the dual-feature model (onset models
// pair the onset train with itself). Order follows feature_names().
inline std::vector<ModelSpec> table1_models(const ExperimentConfig& cfg) {
  const double ws = cfg.window_short_s, wl = cfg.window_long_s;
  std::vector<ModelSpec> specs = {
      {"env_delta", "single", "delta", "", ws},
      {"env_theta", "single", "theta", "", ws},
      {"env_alpha", "single", "alpha", "", ws},
      {"env_beta", "single", "beta", "", ws},
      {"env_broad", "single", "broad", "", ws},
      {"word_onsets", "dual", "broad", "word_onsets", wl},
      {"phoneme_onsets", "dual", "broad", "phoneme_onsets", ws},
      {"word_frequency", "dual", "broad", "word_onsets", wl},
      {"word_surprisal", "dual", "broad", "word_onsets", wl},
      {"phoneme_surprisal", "dual", "broad", "phoneme_onsets", ws},
      {"cohort_entropy", "dual", "broad", "phoneme_onsets", ws},
  };
  return specs;
}

inline void ExperimentConfig::validate() const {
  detail::require(controls >= 2 && patients >= 2, "config: need >= 2 subjects per group");
  detail::require(deficit >= 0.0 && deficit <= 1.0, "config: cohort.deficit must be in [0, 1]");
  detail::require(story_minutes > 0.0, "config: cohort.story_minutes must be positive");
  detail::require(noise_sigma > 0.0, "config: cohort.noise_sigma must be positive");
  detail::require(channels >= 2, "config: cohort.channels must be >= 2");
  detail::require(filter_order >= 4, "config: dsp.filter_order too small");
  detail::require(window_short_s > 0.0 && window_long_s > 0.0 && offset_s > 0.0,
                  "config: mmtask windows and offset must be positive");
  detail::require(train_controls + train_patients >= 2, "config: pretraining cohort too small");
  detail::require(q > 0.0 && q < 1.0, "config: classify.q must be in (0, 1)");
  detail::require(inner_folds >= 2, "config: classify.inner_folds must be >= 2");
  detail::require(!c_grid.empty() && !gamma_scale.empty(), "config: empty hyperparameter grid");
  detail::require(sweep_minutes >= 1, "config: sweep.minutes must be >= 1");
  detail::require(sweep_minutes <= static_cast<std::size_t>(story_minutes),
                  "config: sweep.minutes exceeds the story length");
  for (const auto& hp : {nn_single, nn_dual}) {
    detail::require(hp.spatial_filters >= 1 && hp.temporal_filters >= 1,
                    "config: nn filters must be >= 1");
    detail::require(hp.kernel_width >= 1 && !hp.dilations.empty(), "config: bad nn kernel spec");
    detail::require(hp.lr > 0.0 && hp.batch_size >= 1 && hp.max_epochs >= 1,
                    "config: bad nn training hyperparameters");
  }
  for (const auto& path : {lexicon_path, corpus_path})
    detail::require(path.empty() || std::filesystem::exists(path),
                    "config: referenced path does not exist: " + path);
  for (const auto& name : cohortsim::generative_feature_names()) {
    const auto it = gains.find(name);
    detail::require(it != gains.end(), "config: missing gains." + name);
    detail::require(it->second >= 0.0, "config: gains." + name + " must be >= 0");
  }
  detail::require(gains.size() == cohortsim::generative_feature_names().size(),
                  "config: unexpected extra gain entries");

  // Table 1 must be fully covered: 11 models, one per canonical feature.
  const auto specs = table1_models(*this);
  const auto& names = speechfeat::feature_names();
  detail::ensure(specs.size() == names.size(), "config: Table-1 model list incomplete");
  for (std::size_t i = 0; i < specs.size(); ++i)
    detail::ensure(specs[i].feature == names[i], "config: Table-1 order mismatch");
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, double>)
      out += fmt_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

inline std::uint64_t fnv1a_bytes(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Canonical key=value listing of every hashed field, fixed order, normalized
// number formatting. Whitespace and comments in the source file never reach
// this text, so they cannot invalidate caches.
inline std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  const auto put = [&](const char* key, const std::string& value) {
    out << key << '=' << value << '\n';
  };
  put("seed", std::to_string(seed));
  put("cohort.controls", std::to_string(controls));
  put("cohort.patients", std::to_string(patients));
  put("cohort.deficit", detail::fmt_double(deficit));
  put("cohort.story_minutes", detail::fmt_double(story_minutes));
  put("cohort.noise_sigma", detail::fmt_double(noise_sigma));
  put("cohort.patient_noise_scale", detail::fmt_double(patient_noise_scale));
  put("cohort.trf_jitter", detail::fmt_double(trf_jitter));
  put("cohort.channels", std::to_string(channels));
  put("cohort.control_age_mean", detail::fmt_double(control_age_mean));
  put("cohort.control_age_std", detail::fmt_double(control_age_std));
  put("cohort.patient_age_mean", detail::fmt_double(patient_age_mean));
  put("cohort.patient_age_std", detail::fmt_double(patient_age_std));
  put("cohort.physiology_seed", std::to_string(physiology_seed));
  put("cohort.language_seed", std::to_string(language_seed));
  put("language.words", std::to_string(language_words));
  put("language.sentences", std::to_string(language_sentences));
  for (const auto& [name, gain] : gains) put(("gains." + name).c_str(), detail::fmt_double(gain));
  put("dsp.filter_order", std::to_string(filter_order));
  put("features.add_k", detail::fmt_double(add_k));
  put("features.lexicon", lexicon_path);
  put("features.corpus", corpus_path);
  put("mmtask.window_short_s", detail::fmt_double(window_short_s));
  put("mmtask.window_long_s", detail::fmt_double(window_long_s));
  put("mmtask.offset_s", detail::fmt_double(offset_s));
  put("train.controls", std::to_string(train_controls));
  put("train.patients", std::to_string(train_patients));
  put("train.story_minutes", detail::fmt_double(train_story_minutes));
  const auto put_net = [&](const char* prefix, const NetHyperparams& hp) {
    const std::string p = prefix;
    put((p + ".spatial_filters").c_str(), std::to_string(hp.spatial_filters));
    put((p + ".temporal_filters").c_str(), std::to_string(hp.temporal_filters));
    put((p + ".kernel_width").c_str(), std::to_string(hp.kernel_width));
    put((p + ".dilations").c_str(), detail::fmt_list(hp.dilations));
    put((p + ".lr").c_str(), detail::fmt_double(hp.lr));
    put((p + ".batch_size").c_str(), std::to_string(hp.batch_size));
    put((p + ".max_epochs").c_str(), std::to_string(hp.max_epochs));
    put((p + ".patience").c_str(), std::to_string(hp.patience));
  };
  put_net("nn.single", nn_single);
  put_net("nn.dual", nn_dual);
  put("classify.q", detail::fmt_double(q));
  put("classify.inner_folds", std::to_string(inner_folds));
  put("classify.prune", prune ? "true" : "false");
  put("classify.c_grid", detail::fmt_list(c_grid));
  put("classify.gamma_scale", detail::fmt_list(gamma_scale));
  put("sweep.minutes", std::to_string(sweep_minutes));
  return out.str();
}

inline std::uint64_t ExperimentConfig::semantic_hash() const {
  return detail::fnv1a_bytes(canonical_text());
}

inline std::string ExperimentConfig::semantic_hash_hex() const {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(semantic_hash()));
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct KvParser {
  std::map<std::string, std::string> kv;
  std::set<std::string> consumed;

  bool take(const std::string& key, std::string& out) {
    const auto it = kv.find(key);
    if (it == kv.end()) return false;
    consumed.insert(key);
    out = it->second;
    return true;
  }
  void get(const std::string& key, std::string& field) { take(key, field); }
  void get(const std::string& key, double& field) {
    std::string v;
    if (!take(key, v)) return;
    try {
      std::size_t pos = 0;
      field = std::stod(v, &pos);
      require(pos == v.size(), "trailing junk");
    } catch (const std::exception&) {
      throw InvalidArgument("config: bad number for " + key + ": '" + v + "'");
    }
  }
  void get(const std::string& key, std::size_t& field) {
    std::string v;
    if (!take(key, v)) return;
    try {
      std::size_t pos = 0;
      const auto parsed = std::stoull(v, &pos);
      require(pos == v.size(), "trailing junk");
      field = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      throw InvalidArgument("config: bad integer for " + key + ": '" + v + "'");
    }
  }
  void get(const std::string& key, bool& field) {
    std::string v;
    if (!take(key, v)) return;
    if (v == "true" || v == "1")
      field = true;
    else if (v == "false" || v == "0")
      field = false;
    else
      throw InvalidArgument("config: bad boolean for " + key + ": '" + v + "'");
  }
  void get(const std::string& key, std::vector<double>& field) {
    std::string v;
    if (!take(key, v)) return;
    field.clear();
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      require(!item.empty(), "config: empty list element in " + key);
      field.push_back(std::stod(item));
    }
    require(!field.empty(), "config: empty list for " + key);
  }
  void get(const std::string& key, std::vector<std::size_t>& field) {
    std::string v;
    if (!take(key, v)) return;
    field.clear();
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      require(!item.empty(), "config: empty list element in " + key);
      field.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
    require(!field.empty(), "config: empty list for " + key);
  }
};

}  // namespace detail

// Parse the flat "dotted.key = value" format. '#' starts a comment; blank
// lines are ignored; unknown keys are rejected so typos fail loudly.
inline ExperimentConfig parse_config(const std::string& text) {
  detail::KvParser p;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    detail::require(eq != std::string::npos,
                    "config: line " + std::to_string(lineno) + " is not 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    detail::require(!key.empty(), "config: empty key on line " + std::to_string(lineno));
    detail::require(!p.kv.count(key), "config: duplicate key " + key);
    p.kv[key] = value;
  }

  ExperimentConfig cfg;
  p.get("seed", cfg.seed);
  p.get("jobs", cfg.jobs);
  p.get("out_dir", cfg.out_dir);
  p.get("cohort.controls", cfg.controls);
  p.get("cohort.patients", cfg.patients);
  p.get("cohort.deficit", cfg.deficit);
  p.get("cohort.story_minutes", cfg.story_minutes);
  p.get("cohort.noise_sigma", cfg.noise_sigma);
  p.get("cohort.patient_noise_scale", cfg.patient_noise_scale);
  p.get("cohort.trf_jitter", cfg.trf_jitter);
  p.get("cohort.channels", cfg.channels);
  p.get("cohort.control_age_mean", cfg.control_age_mean);
  p.get("cohort.control_age_std", cfg.control_age_std);
  p.get("cohort.patient_age_mean", cfg.patient_age_mean);
  p.get("cohort.patient_age_std", cfg.patient_age_std);
  p.get("cohort.physiology_seed", cfg.physiology_seed);
  p.get("cohort.language_seed", cfg.language_seed);
  p.get("language.words", cfg.language_words);
  p.get("language.sentences", cfg.language_sentences);
  for (auto& [name, gain] : cfg.gains) p.get("gains." + name, gain);
  p.get("dsp.filter_order", cfg.filter_order);
  p.get("features.add_k", cfg.add_k);
  p.get("features.lexicon", cfg.lexicon_path);
  p.get("features.corpus", cfg.corpus_path);
  p.get("mmtask.window_short_s", cfg.window_short_s);
  p.get("mmtask.window_long_s", cfg.window_long_s);
  p.get("mmtask.offset_s", cfg.offset_s);
  p.get("train.controls", cfg.train_controls);
  p.get("train.patients", cfg.train_patients);
  p.get("train.story_minutes", cfg.train_story_minutes);
  const auto get_net = [&](const std::string& prefix, NetHyperparams& hp) {
    p.get(prefix + ".spatial_filters", hp.spatial_filters);
    p.get(prefix + ".temporal_filters", hp.temporal_filters);
    p.get(prefix + ".kernel_width", hp.kernel_width);
    p.get(prefix + ".dilations", hp.dilations);
    p.get(prefix + ".lr", hp.lr);
    p.get(prefix + ".batch_size", hp.batch_size);
    p.get(prefix + ".max_epochs", hp.max_epochs);
    p.get(prefix + ".patience", hp.patience);
  };
  get_net("nn.single", cfg.nn_single);
  get_net("nn.dual", cfg.nn_dual);
  p.get("classify.q", cfg.q);
  p.get("classify.inner_folds", cfg.inner_folds);
  p.get("classify.prune", cfg.prune);
  p.get("classify.c_grid", cfg.c_grid);
  p.get("classify.gamma_scale", cfg.gamma_scale);
  p.get("sweep.minutes", cfg.sweep_minutes);

  for (const auto& [key, value] : p.kv)
    detail::require(p.consumed.count(key), "config: unknown key " + key);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::require(in.good(), "config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace neurotrack::pipeline
