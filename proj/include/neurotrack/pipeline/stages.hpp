#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"

#include "neurotrack/classify/crossval.hpp"
#include "neurotrack/classify/profiles.hpp"
#include "neurotrack/classify/shapley.hpp"
#include "neurotrack/classify/stats.hpp"
#include "neurotrack/cohortsim/cohort.hpp"
#include "neurotrack/core/parallel.hpp"
#include "neurotrack/dsp/envelope.hpp"
#include "neurotrack/dsp/preprocess.hpp"
#include "neurotrack/mmtask/pairs.hpp"
#include "neurotrack/nn/checkpoint.hpp"
#include "neurotrack/nn/train.hpp"
#include "neurotrack/pipeline/config.hpp"
#include "neurotrack/pipeline/report.hpp"

namespace neurotrack::pipeline {

struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path cohort() const { return root / "cohort"; }
  std::filesystem::path preproc() const { return root / "preproc"; }
  std::filesystem::path features() const { return root / "features"; }
  std::filesystem::path models() const { return root / "models"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path classify_dir() const { return root / "classify"; }
  std::filesystem::path sweep_dir() const { return root / "sweep"; }
  std::filesystem::path report_dir() const { return root / "report"; }
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  ensure(out.is_open(), "cannot open for writing: " + path.string());
  out << text;
  ensure(static_cast<bool>(out), "write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  ensure(in.is_open(), "cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  ensure(in.is_open(), "cannot open for reading: " + path.string());
  return nlohmann::json::parse(in);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::string fmt_hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

// --- shared pieces ---------------------------------------------------------

struct SubjectInfo {
  std::string id;
  bool patient = false;
  double age = 0.0;
};

inline std::vector<SubjectInfo> read_subject_index(const std::filesystem::path& cohort_dir) {
  const auto j = detail::read_json(cohort_dir / "cohort.json");
  detail::ensure(j.at("format") == "neurotrack-cohort-v1", "unknown cohort format");
  std::vector<SubjectInfo> out;
  for (const auto& js : j.at("subjects"))
    out.push_back({js.at("id").get<std::string>(),
                   js.at("group").get<std::string>() == "patient", js.at("age").get<double>()});
  detail::ensure(!out.empty(), "cohort has no subjects");
  return out;
}

inline cohortsim::CohortSpec clinical_spec(const ExperimentConfig& cfg) {
  cohortsim::CohortSpec s;
  s.n_controls = cfg.controls;
  s.n_patients = cfg.patients;
  s.control_ages = {cfg.control_age_mean, cfg.control_age_std};
  s.patient_ages = {cfg.patient_age_mean, cfg.patient_age_std};
  s.story_minutes = cfg.story_minutes;
  s.control_gains = cfg.gains;
  s.patient_gains = cohortsim::scaled_gains(cfg.gains, cfg.deficit);
  s.noise_sigma = cfg.noise_sigma;
  s.patient_noise_scale = cfg.patient_noise_scale;
  s.trf_jitter = cfg.trf_jitter;
  s.n_channels = cfg.channels;
  s.language_words = cfg.language_words;
  s.language_sentences = cfg.language_sentences;
  s.add_k = cfg.add_k;
  s.seed = cfg.seed;
  s.physiology_seed = cfg.physiology_seed;
  s.language_seed = cfg.language_seed;
  return s;
}

// The decoder-training cohort: healthy tracking in both nominal groups, its
// own subjects and story (separate seed stream), same language and
// physiology so the decoders transfer.
inline cohortsim::CohortSpec pretrain_spec(const ExperimentConfig& cfg) {
  auto s = clinical_spec(cfg);
  s.n_controls = cfg.train_controls;
  s.n_patients = cfg.train_patients;
  s.patient_ages = s.control_ages;
  s.story_minutes = cfg.effective_train_minutes();
  s.patient_gains = s.control_gains;
  s.patient_noise_scale = 1.0;
  s.seed = derive_seed(cfg.seed, 0x7121);
  return s;
}

// Distinct EEG bands across Table-1 rows, in first-use order.
inline std::vector<std::string> used_bands(const std::vector<ModelSpec>& specs) {
  std::vector<std::string> bands;
  for (const auto& s : specs)
    if (std::find(bands.begin(), bands.end(), s.eeg_band) == bands.end())
      bands.push_back(s.eeg_band);
  return bands;
}

struct FeatureBundle {
  std::vector<speechfeat::FeatureStream> streams;  // feature_names() order
  std::size_t samples = 0;                         // common cropped length
};

// All eleven stimulus streams for a cohort's story, cropped to the shared
// length (the acoustic envelopes can run a filter tail short of the EEG).
inline FeatureBundle build_stimulus_features(const cohortsim::Cohort& cohort,
                                             const ExperimentConfig& cfg) {
  const auto& names = speechfeat::feature_names();

  const speechfeat::Lexicon* lex = &cohort.language.lexicon;
  speechfeat::Lexicon external_lex;
  if (!cfg.lexicon_path.empty()) {
    external_lex = speechfeat::read_lexicon(cfg.lexicon_path);
    lex = &external_lex;
  }
  const speechfeat::BigramModel* bigram = &cohort.language.bigram;
  speechfeat::BigramModel external_bigram{cfg.add_k};
  if (!cfg.corpus_path.empty()) {
    external_bigram = speechfeat::read_bigram_corpus(cfg.corpus_path, cfg.add_k);
    bigram = &external_bigram;
  }

  dsp::EnvelopeOptions env;
  env.band_filter_order = cfg.filter_order;

  FeatureBundle out;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto band = dsp::band_by_name(names[i].substr(4));
    out.streams.push_back({names[i], dsp::extract_envelope(cohort.story.audio, band, env)});
  }
  const speechfeat::CohortModel cohort_model(*lex);
  speechfeat::LinguisticTracks tracks{cohort.story.words, cohort.story.phonemes};
  auto ling = speechfeat::build_linguistic_features(tracks, *lex, cohort_model, *bigram,
                                                    cohort.story.sentence_initial);
  for (auto& s : ling) out.streams.push_back(std::move(s));

  detail::ensure(out.streams.size() == names.size(), "stimulus features: stream count mismatch");
  for (std::size_t i = 0; i < names.size(); ++i)
    detail::ensure(out.streams[i].name == names[i], "stimulus features: order mismatch");

  // The modulator has the subjects' EEG length by construction.
  std::size_t n = cohort.story.modulator.samples();
  for (const auto& s : out.streams) n = std::min(n, s.signal.samples());
  detail::ensure(n > 0, "stimulus features: streams share no samples");
  for (auto& s : out.streams) s.signal.truncate(n);
  out.samples = n;
  return out;
}

// --- simulate ---------------------------------------------------------------

inline std::vector<std::string> stage_simulate(const ExperimentConfig& cfg, const RunPaths& paths,
                                               std::size_t jobs) {
  const auto cohort = cohortsim::gen_cohort(clinical_spec(cfg), jobs);
  cohortsim::write_cohort(cohort, paths.cohort());
  std::vector<std::string> artifacts = {
      "cohort/cohort.json", "cohort/lexicon.tsv",     "cohort/corpus.txt",    "cohort/story.txt",
      "cohort/story_tracks.tsv", "cohort/audio.ntrk", "cohort/modulator.ntrk"};
  for (const auto& s : cohort.subjects) artifacts.push_back("cohort/subjects/" + s.id + ".ntrk");
  return artifacts;
}

// --- preprocess --------------------------------------------------------------

inline std::vector<std::string> stage_preprocess(const ExperimentConfig& cfg,
                                                 const RunPaths& paths, std::size_t jobs) {
  const auto subjects = read_subject_index(paths.cohort());
  const auto bands = used_bands(table1_models(cfg));
  std::filesystem::create_directories(paths.preproc());

  parallel_for(subjects.size(), static_cast<unsigned>(jobs), [&](std::size_t i) {
    const auto eeg = read_signal(paths.cohort() / "subjects" / (subjects[i].id + ".ntrk"));
    for (const auto& band : bands) {
      const auto out =
          dsp::preprocess_eeg_band(eeg, dsp::band_by_name(band), cfg.filter_order);
      write_signal(out, paths.preproc() / (subjects[i].id + "_" + band + ".ntrk"));
    }
  });

  nlohmann::json meta;
  meta["format"] = "neurotrack-preproc-v1";
  meta["fs"] = 64.0;
  meta["filter_order"] = cfg.filter_order;
  meta["bands"] = bands;
  std::vector<std::string> ids;
  for (const auto& s : subjects) ids.push_back(s.id);
  meta["subjects"] = ids;
  detail::write_text(paths.preproc() / "preproc.json", meta.dump(2) + "\n");

  std::vector<std::string> artifacts = {"preproc/preproc.json"};
  for (const auto& s : subjects)
    for (const auto& band : bands) artifacts.push_back("preproc/" + s.id + "_" + band + ".ntrk");
  return artifacts;
}

// --- features ----------------------------------------------------------------

inline std::vector<std::string> stage_features(const ExperimentConfig& cfg, const RunPaths& paths,
                                               std::size_t /*jobs*/) {
  const auto shared = cohortsim::read_cohort_shared(paths.cohort());
  const auto bundle = build_stimulus_features(shared, cfg);
  std::filesystem::create_directories(paths.features());

  std::vector<std::string> artifacts;
  for (const auto& s : bundle.streams) {
    write_signal(s.signal, paths.features() / (s.name + ".ntrk"));
    artifacts.push_back("features/" + s.name + ".ntrk");
  }
  nlohmann::json meta;
  meta["format"] = "neurotrack-features-v1";
  meta["fs"] = speechfeat::kFeatureFs;
  meta["samples"] = bundle.samples;
  meta["names"] = speechfeat::feature_names();
  detail::write_text(paths.features() / "features.json", meta.dump(2) + "\n");
  artifacts.push_back("features/features.json");
  return artifacts;
}

// --- train --------------------------------------------------------------------

namespace detail {

inline nn::ModelConfig model_config_for(const ExperimentConfig& cfg, const ModelSpec& spec) {
  const auto& hp = spec.architecture == "dual" ? cfg.nn_dual : cfg.nn_single;
  nn::ModelConfig mc;
  mc.eeg_channels = cfg.channels;
  mc.spatial_filters = hp.spatial_filters;
  mc.temporal_filters = hp.temporal_filters;
  mc.kernel_width = hp.kernel_width;
  mc.dilations = hp.dilations;
  mc.window = static_cast<std::size_t>(std::llround(spec.window_s * 64.0));
  return mc;
}

}  // namespace detail

inline std::vector<std::string> stage_train(const ExperimentConfig& cfg, const RunPaths& paths,
                                            std::size_t jobs) {
  const auto cohort = cohortsim::gen_cohort(pretrain_spec(cfg), jobs);
  const auto bundle = build_stimulus_features(cohort, cfg);
  const auto specs = table1_models(cfg);
  std::filesystem::create_directories(paths.models());

  std::map<std::string, const speechfeat::FeatureStream*> stream_by_name;
  for (const auto& s : bundle.streams) stream_by_name[s.name] = &s;

  std::vector<nlohmann::json> log(specs.size());

  // One band in memory at a time: preprocess every pretraining subject for
  // that band, train all its models, then drop the signals.
  for (const auto& band : used_bands(specs)) {
    std::vector<MultichannelSignal> eegs(cohort.subjects.size());
    parallel_for(cohort.subjects.size(), static_cast<unsigned>(jobs), [&](std::size_t i) {
      auto sig = dsp::preprocess_eeg_band(cohort.subjects[i].eeg, dsp::band_by_name(band),
                                          cfg.filter_order);
      detail::ensure(sig.samples() >= bundle.samples, "train: preprocessed EEG shorter than features");
      sig.truncate(bundle.samples);
      eegs[i] = std::move(sig);
    });

    for (std::size_t idx = 0; idx < specs.size(); ++idx) {
      const auto& spec = specs[idx];
      if (spec.eeg_band != band) continue;
      const auto& hp = spec.architecture == "dual" ? cfg.nn_dual : cfg.nn_single;
      const auto mc = detail::model_config_for(cfg, spec);

      mmtask::PairConfig pc;
      pc.window_s = spec.window_s;
      pc.hop_s = spec.window_s;
      pc.offset_s = cfg.offset_s;

      const auto* fa = stream_by_name.at(spec.feature);
      const auto* fb = spec.feature_b.empty() ? nullptr : stream_by_name.at(spec.feature_b);

      nn::PairDataset train_ds, val_ds;
      for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
        const auto pairs = mmtask::make_pairs(eegs[i], *fa, pc, cohort.subjects[i].id);
        const auto split = mmtask::split_pairs(pairs);
        train_ds.add_source({&eegs[i], fa, fb}, split.train);
        val_ds.add_source({&eegs[i], fa, fb}, split.val);
      }

      const auto init_seed = derive_seed(cfg.seed, 0x3d00 + idx);
      auto model = nn::make_model(spec.architecture, mc, init_seed);
      nn::TrainConfig tc;
      tc.adam.lr = hp.lr;
      tc.batch_size = hp.batch_size;
      tc.max_epochs = hp.max_epochs;
      tc.patience = hp.patience;
      tc.seed = derive_seed(cfg.seed, 0x3e00 + idx);
      const auto r = nn::train_model(*model, train_ds, val_ds, tc);

      nn::CheckpointMeta meta;
      meta.feature_name = spec.feature;
      meta.seed = init_seed;
      meta.best_epoch = r.best_epoch;
      meta.epochs_run = r.epochs_run;
      meta.val_loss = r.val_loss[r.best_epoch];
      meta.val_accuracy = r.val_accuracy[r.best_epoch];
      nn::save_checkpoint(*model, meta, paths.models() / spec.feature);

      log[idx] = {{"feature", spec.feature},
                  {"architecture", spec.architecture},
                  {"eeg_band", spec.eeg_band},
                  {"window_s", spec.window_s},
                  {"train_pairs", train_ds.size()},
                  {"val_pairs", val_ds.size()},
                  {"best_epoch", r.best_epoch},
                  {"epochs_run", r.epochs_run},
                  {"train_loss", r.train_loss[r.best_epoch]},
                  {"val_loss", r.val_loss[r.best_epoch]},
                  {"val_accuracy", r.val_accuracy[r.best_epoch]}};
    }
  }

  nlohmann::json summary;
  summary["format"] = "neurotrack-training-v1";
  summary["models"] = log;
  detail::write_text(paths.models() / "training.json", summary.dump(2) + "\n");

  std::vector<std::string> artifacts;
  for (const auto& spec : specs) {
    artifacts.push_back("models/" + spec.feature + ".json");
    artifacts.push_back("models/" + spec.feature + ".bin");
  }
  artifacts.push_back("models/training.json");
  return artifacts;
}

// --- evaluate ------------------------------------------------------------------

namespace detail {

struct PredRow {
  double start_s = 0.0;
  int correct = 0;
  double probability = 0.0;
};

struct SubjectEval {
  std::map<std::string, double> accuracies;
  std::vector<std::vector<PredRow>> rows;  // per Table-1 row
};

}  // namespace detail

inline std::vector<std::string> stage_evaluate(const ExperimentConfig& cfg, const RunPaths& paths,
                                               std::size_t jobs) {
  const auto subjects = read_subject_index(paths.cohort());
  const auto specs = table1_models(cfg);
  const auto& names = speechfeat::feature_names();

  std::vector<speechfeat::FeatureStream> streams;
  for (const auto& name : names)
    streams.push_back({name, read_signal(paths.features() / (name + ".ntrk"))});
  const std::size_t samples = streams.front().signal.samples();
  for (const auto& s : streams)
    detail::ensure(s.signal.samples() == samples, "evaluate: feature lengths differ");

  const auto bands = used_bands(specs);
  std::filesystem::create_directories(paths.eval());

  std::vector<detail::SubjectEval> results(subjects.size());

  parallel_for(subjects.size(), static_cast<unsigned>(jobs), [&](std::size_t si) {
    detail::SubjectEval res;
    res.rows.resize(specs.size());
    for (const auto& band : bands) {
      auto eeg = read_signal(paths.preproc() / (subjects[si].id + "_" + band + ".ntrk"));
      detail::ensure(eeg.samples() >= samples, "evaluate: preprocessed EEG shorter than features");
      eeg.truncate(samples);
      for (std::size_t idx = 0; idx < specs.size(); ++idx) {
        const auto& spec = specs[idx];
        if (spec.eeg_band != band) continue;

        auto loaded = nn::load_checkpoint(paths.models() / spec.feature);
        detail::ensure(loaded.meta.feature_name == spec.feature,
                       "evaluate: checkpoint/model mismatch for " + spec.feature);
        const auto mc = detail::model_config_for(cfg, spec);
        detail::ensure(loaded.model->config().window == mc.window,
                       "evaluate: checkpoint window disagrees with config");

        mmtask::PairConfig pc;
        pc.window_s = spec.window_s;
        pc.hop_s = spec.window_s;
        pc.offset_s = cfg.offset_s;
        const auto* fa = &streams[idx];
        detail::ensure(fa->name == spec.feature, "evaluate: stream order broke");
        const speechfeat::FeatureStream* fb = nullptr;
        if (!spec.feature_b.empty()) {
          const auto it = std::find_if(streams.begin(), streams.end(),
                                       [&](const auto& s) { return s.name == spec.feature_b; });
          detail::ensure(it != streams.end(), "evaluate: missing paired stream");
          fb = &*it;
        }

        const auto pairs = mmtask::make_pairs(eeg, *fa, pc, subjects[si].id);
        nn::PairDataset ds;
        ds.add_source({&eeg, fa, fb}, pairs);
        const auto ev = nn::evaluate(*loaded.model, ds);

        res.accuracies[spec.feature] = ev.accuracy;
        for (std::size_t k = 0; k < ds.size(); ++k) {
          const auto& p = ds.pair(k);
          const double label = p.first_is_match ? 1.0 : 0.0;
          res.rows[idx].push_back({p.start_s,
                                   nn::prediction_correct(ev.probabilities[k], label) ? 1 : 0,
                                   ev.probabilities[k]});
        }
      }
    }
    results[si] = std::move(res);
  });

  std::vector<classify::TrackingProfile> profiles;
  for (std::size_t si = 0; si < subjects.size(); ++si)
    profiles.push_back({subjects[si].id, subjects[si].patient, subjects[si].age,
                        results[si].accuracies});
  classify::write_profiles(profiles, paths.eval() / "profiles.csv");

  std::ostringstream csv;
  csv << "feature,subject_id,start_s,window_s,correct,probability\n";
  for (std::size_t si = 0; si < subjects.size(); ++si)
    for (std::size_t idx = 0; idx < specs.size(); ++idx)
      for (const auto& row : results[si].rows[idx])
        csv << specs[idx].feature << ',' << subjects[si].id << ','
            << detail::fmt_double(row.start_s) << ',' << detail::fmt_double(specs[idx].window_s)
            << ',' << row.correct << ',' << detail::fmt_double(row.probability) << '\n';
  detail::write_text(paths.eval() / "predictions.csv", csv.str());

  return {"eval/profiles.csv", "eval/predictions.csv"};
}

// --- classify -------------------------------------------------------------------

inline classify::CvConfig cv_config(const ExperimentConfig& cfg, std::size_t jobs) {
  classify::CvConfig cv;
  cv.c_grid = cfg.c_grid;
  cv.gamma_scale = cfg.gamma_scale;
  cv.inner_folds = cfg.inner_folds;
  cv.prune = cfg.prune;
  cv.seed = derive_seed(cfg.seed, 0xc7a5);
  cv.jobs = jobs;
  return cv;
}

inline std::vector<std::string> stage_classify(const ExperimentConfig& cfg, const RunPaths& paths,
                                               std::size_t jobs) {
  const auto profiles = classify::read_profiles(paths.eval() / "profiles.csv");
  std::filesystem::create_directories(paths.classify_dir());

  std::map<std::string, std::vector<double>> patients, controls;
  classify::split_by_group(profiles, patients, controls);
  const auto tests = classify::feature_tests(patients, controls, cfg.q);
  std::map<std::string, const classify::StatTestResult*> by_feature;
  for (const auto& t : tests) by_feature[t.feature] = &t;

  nlohmann::json stats;
  stats["format"] = "neurotrack-stats-v1";
  stats["q"] = cfg.q;
  stats["n_controls"] = controls.begin()->second.size();
  stats["n_patients"] = patients.begin()->second.size();
  stats["tests"] = nlohmann::json::array();
  for (const auto& name : speechfeat::feature_names()) {
    const auto* t = by_feature.at(name);
    stats["tests"].push_back({{"feature", t->feature},
                              {"w", t->w},
                              {"p_raw", t->p_raw},
                              {"p_adjusted", t->p_adjusted},
                              {"reject", t->reject}});
  }
  detail::write_text(paths.classify_dir() / "stats.json", stats.dump(2) + "\n");

  const auto res = classify::nested_cv(profiles, cv_config(cfg, jobs));

  // Per-subject attributions from each LOSO fold's own model, rebuilt
  // deterministically from the recorded hyperparameters and training ids.
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  classify::to_matrix(profiles, x, y);
  const std::size_t dim = x.front().size();
  std::vector<std::vector<double>> phi(profiles.size(), std::vector<double>(dim, 0.0));

  parallel_for(profiles.size(), static_cast<unsigned>(jobs), [&](std::size_t outer) {
    const auto& fold = res.folds[outer];
    detail::ensure(fold.test_subject == profiles[outer].subject_id,
                   "classify: fold order mismatch");
    std::vector<bool> dropped(dim, false);
    for (const auto d : fold.dropped_features) dropped[d] = true;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < dim; ++j)
      if (!dropped[j]) keep.push_back(j);

    std::vector<std::vector<double>> xtr;
    std::vector<int> ytr;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (i == outer) continue;
      std::vector<double> row;
      for (const auto j : keep) row.push_back(x[i][j]);
      xtr.push_back(std::move(row));
      ytr.push_back(y[i]);
      ids.push_back(profiles[i].subject_id);
    }
    std::sort(ids.begin(), ids.end());
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& id : ids) h = classify::detail::fnv1a(id + ";", h);
    detail::ensure(h == fold.train_hash, "classify: training-set audit hash mismatch");

    const auto model = classify::svm_train(xtr, ytr, fold.c, fold.gamma);
    std::vector<double> xte;
    for (const auto j : keep) xte.push_back(x[outer][j]);
    detail::ensure(std::abs(model.decision_score(xte) - fold.score) <= 1e-9,
                   "classify: fold model reconstruction drifted");

    std::vector<std::vector<double>> background;
    for (const auto& row : x) {
      std::vector<double> r;
      for (const auto j : keep) r.push_back(row[j]);
      background.push_back(std::move(r));
    }
    const auto values = classify::shapley_values(model, xte, background);
    for (std::size_t t = 0; t < keep.size(); ++t) phi[outer][keep[t]] = values[t];
  });

  const auto order = classify::profile_feature_order();
  std::vector<double> mean(dim, 0.0), mean_abs(dim, 0.0);
  for (const auto& row : phi)
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] += row[j] / static_cast<double>(phi.size());
      mean_abs[j] += std::abs(row[j]) / static_cast<double>(phi.size());
    }

  nlohmann::json cls;
  cls["format"] = "neurotrack-classification-v1";
  cls["metrics"] = {{"accuracy", res.test_metrics.accuracy},
                    {"f1", res.test_metrics.f1},
                    {"sensitivity", res.test_metrics.sensitivity},
                    {"specificity", res.test_metrics.specificity},
                    {"tp", res.test_metrics.tp},
                    {"tn", res.test_metrics.tn},
                    {"fp", res.test_metrics.fp},
                    {"fn", res.test_metrics.fn}};
  cls["auc"] = res.roc.auc;
  cls["roc"] = nlohmann::json::array();
  for (const auto& p : res.roc.points) cls["roc"].push_back({p.fpr, p.tpr});
  cls["folds"] = nlohmann::json::array();
  for (std::size_t i = 0; i < res.folds.size(); ++i) {
    const auto& f = res.folds[i];
    std::vector<std::string> dropped_names;
    for (const auto d : f.dropped_features) dropped_names.push_back(order[d]);
    cls["folds"].push_back({{"subject", f.test_subject},
                            {"label", f.label},
                            {"prediction", f.prediction},
                            {"score", f.score},
                            {"c", f.c},
                            {"gamma", f.gamma},
                            {"dropped_features", dropped_names},
                            {"train_hash", detail::fmt_hex64(f.train_hash)},
                            {"shapley", phi[i]}});
  }
  cls["shapley"] = {{"feature_order", order}, {"mean", mean}, {"mean_abs", mean_abs}};
  detail::write_text(paths.classify_dir() / "classification.json", cls.dump(2) + "\n");

  return {"classify/stats.json", "classify/classification.json"};
}

// --- sweep ----------------------------------------------------------------------

namespace detail {

struct PredRecord {
  std::string feature, subject;
  double start_s = 0.0, window_s = 0.0;
  int correct = 0;
};

}  // namespace detail

inline std::vector<std::string> stage_sweep(const ExperimentConfig& cfg, const RunPaths& paths,
                                            std::size_t jobs) {
  const auto profiles = classify::read_profiles(paths.eval() / "profiles.csv");
  std::filesystem::create_directories(paths.sweep_dir());

  std::vector<detail::PredRecord> preds;
  {
    std::ifstream in(paths.eval() / "predictions.csv");
    detail::ensure(in.is_open(), "sweep: cannot open predictions.csv");
    std::string line;
    detail::ensure(static_cast<bool>(std::getline(in, line)) &&
                       line == "feature,subject_id,start_s,window_s,correct,probability",
                   "sweep: unexpected predictions.csv header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cols = detail::split_csv(line);
      detail::ensure(cols.size() == 6, "sweep: malformed predictions row");
      preds.push_back({cols[0], cols[1], std::stod(cols[2]), std::stod(cols[3]),
                       std::stoi(cols[4])});
    }
    detail::ensure(!preds.empty(), "sweep: predictions.csv has no rows");
  }

  const auto cv = cv_config(cfg, jobs);
  const auto& names = speechfeat::feature_names();
  std::ostringstream csv;
  csv << "minutes,accuracy,auc\n";

  for (std::size_t k = 1; k <= cfg.sweep_minutes; ++k) {
    const double limit = 60.0 * static_cast<double>(k);
    std::map<std::string, std::map<std::string, std::pair<std::size_t, std::size_t>>> counts;
    std::size_t included = 0;
    for (const auto& p : preds) {
      if (p.start_s + p.window_s > limit + 1e-9) continue;
      auto& [correct, total] = counts[p.subject][p.feature];
      correct += static_cast<std::size_t>(p.correct);
      total += 1;
      ++included;
    }

    auto sliced = profiles;
    for (auto& prof : sliced) {
      const auto it = counts.find(prof.subject_id);
      detail::ensure(it != counts.end(),
                     "sweep: no segments for " + prof.subject_id + " within " +
                         std::to_string(k) + " min");
      for (const auto& name : names) {
        const auto ft = it->second.find(name);
        detail::ensure(ft != it->second.end() && ft->second.second > 0,
                       "sweep: no " + name + " segments for " + prof.subject_id + " within " +
                           std::to_string(k) + " min");
        prof.accuracies[name] = static_cast<double>(ft->second.first) /
                                static_cast<double>(ft->second.second);
      }
    }

    // With every segment included the sliced profiles must reproduce the
    // evaluate stage's accuracies exactly; anything else is an accounting bug.
    if (included == preds.size())
      for (std::size_t i = 0; i < profiles.size(); ++i)
        for (const auto& name : names)
          detail::ensure(sliced[i].accuracies.at(name) == profiles[i].accuracies.at(name),
                         "sweep: full-length slice disagrees with profiles.csv");

    const auto res = classify::nested_cv(sliced, cv);
    csv << k << ',' << detail::fmt_double(res.test_metrics.accuracy) << ','
        << detail::fmt_double(res.roc.auc) << '\n';
  }

  detail::write_text(paths.sweep_dir() / "sweep.csv", csv.str());
  return {"sweep/sweep.csv"};
}

// --- report ---------------------------------------------------------------------

inline std::vector<std::string> stage_report(const ExperimentConfig& /*cfg*/,
                                             const RunPaths& paths, std::size_t /*jobs*/) {
  const auto profiles = classify::read_profiles(paths.eval() / "profiles.csv");
  const auto stats = detail::read_json(paths.classify_dir() / "stats.json");
  const auto cls = detail::read_json(paths.classify_dir() / "classification.json");
  const auto sweep_text = detail::read_text(paths.sweep_dir() / "sweep.csv");
  std::filesystem::create_directories(paths.report_dir());
  const auto& names = speechfeat::feature_names();

  // Figure 2: per-feature tracking accuracy by group, plus the test table.
  std::vector<Fig2Datum> data;
  std::ostringstream acc_csv;
  acc_csv << "subject_id,group,age,feature,accuracy\n";
  for (const auto& p : profiles)
    for (const auto& name : names) {
      data.push_back({p.subject_id, name, p.patient, p.accuracies.at(name)});
      acc_csv << p.subject_id << ',' << (p.patient ? "patient" : "control") << ','
              << detail::fmt_double(p.age) << ',' << name << ','
              << detail::fmt_double(p.accuracies.at(name)) << '\n';
    }
  detail::write_text(paths.report_dir() / "fig2_accuracies.csv", acc_csv.str());
  detail::write_text(paths.report_dir() / "fig2_accuracies.svg", render_fig2(names, data));

  std::ostringstream stats_csv;
  stats_csv << "feature,w,p_raw,p_adjusted,reject\n";
  for (const auto& t : stats.at("tests"))
    stats_csv << t.at("feature").get<std::string>() << ','
              << detail::fmt_double(t.at("w").get<double>()) << ','
              << detail::fmt_double(t.at("p_raw").get<double>()) << ','
              << detail::fmt_double(t.at("p_adjusted").get<double>()) << ','
              << (t.at("reject").get<bool>() ? 1 : 0) << '\n';
  detail::write_text(paths.report_dir() / "fig2_stats.csv", stats_csv.str());

  // Figure 3a: LOSO ROC, recomputed from the per-fold scores.
  std::vector<double> scores;
  std::vector<int> labels, predictions;
  for (const auto& f : cls.at("folds")) {
    scores.push_back(f.at("score").get<double>());
    labels.push_back(f.at("label").get<int>());
    predictions.push_back(f.at("prediction").get<int>());
  }
  const auto roc = classify::roc_auc(scores, labels);
  const auto m = classify::metrics(predictions, labels);
  std::ostringstream roc_csv;
  roc_csv << "fpr,tpr,threshold\n";
  std::vector<std::array<double, 3>> roc_pts;
  for (const auto& p : roc.points) {
    roc_csv << detail::fmt_double(p.fpr) << ',' << detail::fmt_double(p.tpr) << ','
            << detail::fmt_double(p.threshold) << '\n';
    roc_pts.push_back({p.fpr, p.tpr, p.threshold});
  }
  detail::write_text(paths.report_dir() / "fig3a_roc.csv", roc_csv.str());
  detail::write_text(paths.report_dir() / "fig3a_roc.svg", render_roc(roc_pts, roc.auc, m));

  // Figure 3b: mean |SHAP| ranking.
  const auto& shap = cls.at("shapley");
  const auto order = shap.at("feature_order").get<std::vector<std::string>>();
  const auto mean = shap.at("mean").get<std::vector<double>>();
  const auto mean_abs = shap.at("mean_abs").get<std::vector<double>>();
  std::vector<std::size_t> rank(order.size());
  for (std::size_t j = 0; j < rank.size(); ++j) rank[j] = j;
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return mean_abs[a] > mean_abs[b]; });
  std::ostringstream shap_csv;
  shap_csv << "feature,mean_shap,mean_abs_shap\n";
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto j : rank) {
    shap_csv << order[j] << ',' << detail::fmt_double(mean[j]) << ','
             << detail::fmt_double(mean_abs[j]) << '\n';
    ranked.emplace_back(order[j], mean_abs[j]);
  }
  detail::write_text(paths.report_dir() / "fig3b_shapley.csv", shap_csv.str());
  detail::write_text(paths.report_dir() / "fig3b_shapley.svg", render_shapley(ranked));

  // Figure 3c: the recording-length sweep, table copied verbatim.
  detail::write_text(paths.report_dir() / "fig3c_sweep.csv", sweep_text);
  std::vector<std::array<double, 3>> sweep_rows;
  {
    std::istringstream in(sweep_text);
    std::string line;
    detail::ensure(static_cast<bool>(std::getline(in, line)) && line == "minutes,accuracy,auc",
                   "report: unexpected sweep.csv header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cols = detail::split_csv(line);
      detail::ensure(cols.size() == 3, "report: malformed sweep row");
      sweep_rows.push_back({std::stod(cols[0]), std::stod(cols[1]), std::stod(cols[2])});
    }
    detail::ensure(!sweep_rows.empty(), "report: sweep.csv has no rows");
  }
  detail::write_text(paths.report_dir() / "fig3c_sweep.svg", render_sweep(sweep_rows));

  return {"report/fig2_accuracies.csv", "report/fig2_accuracies.svg", "report/fig2_stats.csv",
          "report/fig3a_roc.csv",       "report/fig3a_roc.svg",       "report/fig3b_shapley.csv",
          "report/fig3b_shapley.svg",   "report/fig3c_sweep.csv",     "report/fig3c_sweep.svg"};
}

}  // namespace neurotrack::pipeline
