#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "neurotrack/pipeline/cli.hpp"

namespace fs = std::filesystem;
using namespace neurotrack;
using namespace neurotrack::pipeline;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.is_open()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

// Smoke-scale experiment: smallest cohort nested CV accepts, shortest story
// that still yields ten base pairs for the 10 s windows.
ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.jobs = 1;
  cfg.out_dir = out.string();
  cfg.controls = 5;
  cfg.patients = 5;
  cfg.story_minutes = 2.0;
  cfg.channels = 8;
  cfg.train_controls = 2;
  cfg.train_patients = 2;
  for (auto* hp : {&cfg.nn_single, &cfg.nn_dual}) {
    hp->spatial_filters = 2;
    hp->temporal_filters = 2;
    hp->max_epochs = 2;
  }
  cfg.sweep_minutes = 2;
  return cfg;
}

std::string config_file_text(const ExperimentConfig& cfg) {
  return cfg.canonical_text() + "out_dir = " + cfg.out_dir + "\n";
}

}  // namespace

// --- config ------------------------------------------------------------------

TEST(Config, DefaultsValidate) {
  const ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.semantic_hash_hex().size(), 16u);
}

TEST(Config, CanonicalTextRoundTrips) {
  const ExperimentConfig cfg;
  const auto back = parse_config(cfg.canonical_text());
  EXPECT_EQ(back.semantic_hash(), cfg.semantic_hash());
  EXPECT_EQ(back.canonical_text(), cfg.canonical_text());

  auto tiny = tiny_config("runs/tiny");
  const auto tiny_back = parse_config(config_file_text(tiny));
  EXPECT_EQ(tiny_back.semantic_hash(), tiny.semantic_hash());
  EXPECT_EQ(tiny_back.out_dir, tiny.out_dir);
}

TEST(Config, HashIgnoresCommentsAndWhitespace) {
  const auto plain = parse_config("seed = 5\n");
  const auto noisy = parse_config("# a comment\n\n   seed=5   # trailing\n\n");
  EXPECT_EQ(plain.semantic_hash(), noisy.semantic_hash());

  const auto other = parse_config("seed = 6\n");
  EXPECT_NE(plain.semantic_hash(), other.semantic_hash());
}

TEST(Config, HashIgnoresOutputLocationAndJobs) {
  ExperimentConfig a, b;
  b.out_dir = "somewhere/else";
  b.jobs = 16;
  EXPECT_EQ(a.semantic_hash(), b.semantic_hash());
  b.seed = 2;
  EXPECT_NE(a.semantic_hash(), b.semantic_hash());
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("sed = 5\n"), InvalidArgument);               // typo'd key
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), InvalidArgument);    // duplicate
  EXPECT_THROW(parse_config("classify.q = nope\n"), InvalidArgument);     // bad number
  EXPECT_THROW(parse_config("seed 5\n"), InvalidArgument);                // no '='
  EXPECT_THROW(parse_config("cohort.deficit = 1.5\n"), InvalidArgument);  // validation
  EXPECT_THROW(parse_config("sweep.minutes = 25\n"), InvalidArgument);    // > story length
  EXPECT_THROW(parse_config("gains.bogus = 1\n"), InvalidArgument);       // unknown gain
}

TEST(Config, ShippedConfigsParse) {
  const fs::path src = NTRK_SOURCE_DIR;
  const auto def = read_config(src / "configs" / "default.conf");
  EXPECT_EQ(def.controls, 22u);
  EXPECT_EQ(def.patients, 26u);
  EXPECT_DOUBLE_EQ(def.deficit, 0.6);
  EXPECT_EQ(def.sweep_minutes, 20u);

  const auto smoke = read_config(src / "configs" / "smoke.conf");
  EXPECT_EQ(smoke.seed, 7u);
  EXPECT_EQ(smoke.controls + smoke.patients, 10u);
  EXPECT_NE(def.semantic_hash(), smoke.semantic_hash());
}

TEST(Table1, OneModelPerFeatureInCanonicalOrder) {
  const ExperimentConfig cfg;
  const auto specs = table1_models(cfg);
  const auto& names = speechfeat::feature_names();
  ASSERT_EQ(specs.size(), names.size());

  const std::vector<std::string> word_level = {"word_onsets", "word_frequency", "word_surprisal"};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    EXPECT_EQ(s.feature, names[i]);
    const bool envelope = s.feature.rfind("env_", 0) == 0;
    if (envelope) {
      EXPECT_EQ(s.architecture, "single");
      EXPECT_EQ(s.eeg_band, s.feature.substr(4));
      EXPECT_TRUE(s.feature_b.empty());
    } else {
      EXPECT_EQ(s.architecture, "dual");
      EXPECT_EQ(s.eeg_band, "broad");
      EXPECT_TRUE(s.feature_b == "word_onsets" || s.feature_b == "phoneme_onsets") << s.feature;
    }
    const bool is_word_level =
        std::find(word_level.begin(), word_level.end(), s.feature) != word_level.end();
    EXPECT_DOUBLE_EQ(s.window_s, is_word_level ? cfg.window_long_s : cfg.window_short_s)
        << s.feature;
    if (!envelope)
      EXPECT_EQ(s.feature_b, is_word_level ? "word_onsets" : "phoneme_onsets") << s.feature;
  }
}

// --- manifest ------------------------------------------------------------------

TEST(Manifest, RoundTripAndSatisfaction) {
  const auto dir = fresh_dir("ntrk_manifest_rt");
  RunManifest m;
  m.config_hash = "feedbeeffeedbeef";
  m.stages["simulate"] = {"done", 12.5, "feedbeeffeedbeef", {"a.txt", "sub/b.txt"}};
  save_manifest(m, dir);

  const auto back = load_manifest(dir);
  EXPECT_EQ(back.tool_version, m.tool_version);
  EXPECT_EQ(back.config_hash, m.config_hash);
  ASSERT_EQ(back.stages.size(), 1u);
  EXPECT_EQ(back.stages.at("simulate").status, "done");
  EXPECT_DOUBLE_EQ(back.stages.at("simulate").wall_ms, 12.5);
  EXPECT_EQ(back.stages.at("simulate").artifacts.size(), 2u);

  // satisfied only once every artifact exists under the matching hash
  EXPECT_FALSE(stage_satisfied(back, dir, "simulate", "feedbeeffeedbeef"));
  spit(dir / "a.txt", "a");
  fs::create_directories(dir / "sub");
  spit(dir / "sub" / "b.txt", "b");
  EXPECT_TRUE(stage_satisfied(back, dir, "simulate", "feedbeeffeedbeef"));
  EXPECT_FALSE(stage_satisfied(back, dir, "simulate", "0000000000000000"));
  EXPECT_FALSE(stage_satisfied(back, dir, "preprocess", "feedbeeffeedbeef"));
  fs::remove(dir / "a.txt");
  EXPECT_FALSE(stage_satisfied(back, dir, "simulate", "feedbeeffeedbeef"));

  EXPECT_EQ(load_manifest(dir / "nowhere").stages.size(), 0u);  // fresh dir: empty manifest
}

// --- stage helpers ---------------------------------------------------------------

TEST(Stages, PretrainCohortIsHealthyAndDisjoint) {
  auto cfg = tiny_config("runs/x");
  const auto clin = clinical_spec(cfg);
  EXPECT_EQ(clin.n_controls, 5u);
  EXPECT_EQ(clin.seed, cfg.seed);
  EXPECT_DOUBLE_EQ(clin.patient_gains.at("env_broad"), 0.6 * clin.control_gains.at("env_broad"));

  const auto pre = pretrain_spec(cfg);
  EXPECT_EQ(pre.n_controls, 2u);
  EXPECT_EQ(pre.n_patients, 2u);
  EXPECT_EQ(pre.patient_gains, pre.control_gains);
  EXPECT_DOUBLE_EQ(pre.patient_noise_scale, 1.0);
  EXPECT_NE(pre.seed, clin.seed);  // its own story and physiology stream
  EXPECT_DOUBLE_EQ(pre.story_minutes, cfg.story_minutes);

  cfg.train_story_minutes = 3.0;
  EXPECT_DOUBLE_EQ(pretrain_spec(cfg).story_minutes, 3.0);
}

TEST(Stages, UsedBandsInFirstUseOrder) {
  const auto bands = used_bands(table1_models(ExperimentConfig{}));
  EXPECT_EQ(bands, (std::vector<std::string>{"delta", "theta", "alpha", "beta", "broad"}));
}

// --- stage DAG --------------------------------------------------------------------

TEST(Experiment, StageTableIsComplete) {
  EXPECT_EQ(all_stages().size(), 8u);
  for (const auto& name : all_stages()) {
    EXPECT_NO_THROW(stage_fn(name));
    EXPECT_TRUE(stage_dependencies().count(name)) << name;
  }
  EXPECT_THROW(stage_fn("bogus"), InvalidArgument);
}

TEST(Experiment, MissingDependencyNamesTheStage) {
  auto cfg = tiny_config(fresh_dir("ntrk_dag_holes"));
  const auto expect_dep = [&](const std::string& stage, const std::string& dep) {
    try {
      run_stages(cfg, {stage});
      FAIL() << stage << " ran without " << dep;
    } catch (const DependencyError& e) {
      EXPECT_NE(std::string(e.what()).find("requires '" + dep + "'"), std::string::npos)
          << e.what();
    }
  };
  expect_dep("classify", "evaluate");
  expect_dep("sweep", "evaluate");
  expect_dep("report", "classify");
  expect_dep("train", "features");
  expect_dep("preprocess", "simulate");
  EXPECT_THROW(run_stages(cfg, {"bogus"}), InvalidArgument);

  // a requested dependency earlier in the same invocation satisfies the plan,
  // but order inside the request list does not matter
  EXPECT_THROW(run_stages(cfg, {"classify", "preprocess"}), DependencyError);
}

// --- CLI argument handling -----------------------------------------------------------

TEST(Cli, ParseAndValidationFailuresExitOne) {
  EXPECT_EQ(cli_main({}), 1);                                           // no subcommand
  EXPECT_EQ(cli_main({"frobnicate"}), 1);                               // unknown subcommand
  EXPECT_EQ(cli_main({"run"}), 1);                                      // --config required
  EXPECT_EQ(cli_main({"run", "--config", "/does/not/exist.conf"}), 1);  // missing file
  EXPECT_EQ(cli_main({"report"}), 1);  // neither dir nor --config

  const auto dir = fresh_dir("ntrk_cli_args");
  const auto conf = dir / "tiny.conf";
  spit(conf, config_file_text(tiny_config(dir / "out")));
  EXPECT_EQ(cli_main({"run", "--config", conf.string(), "--stages", "bogus"}), 1);
  EXPECT_EQ(cli_main({"run", "--config", conf.string(), "--seed", "abc"}), 1);
  EXPECT_EQ(cli_main({"run", "--config", conf.string(), "--jobs", "-2"}), 1);
  EXPECT_EQ(cli_main({"inspect", (dir / "nowhere").string()}), 1);  // no manifest yet

  spit(conf, "cohort.controls = 1\n");
  EXPECT_EQ(cli_main({"run", "--config", conf.string()}), 1);  // config validation
}

TEST(Cli, MissingDependencyExitsTwo) {
  const auto dir = fresh_dir("ntrk_cli_deps");
  const auto conf = dir / "tiny.conf";
  spit(conf, config_file_text(tiny_config(dir / "out")));
  EXPECT_EQ(cli_main({"run", "--config", conf.string(), "--stages", "classify"}), 2);
  EXPECT_EQ(cli_main({"report", (dir / "out").string()}), 2);
}

// --- end to end -------------------------------------------------------------------

TEST(PipelineE2E, TinyRunEndToEnd) {
  const auto root = fresh_dir("ntrk_pipeline_e2e");
  auto cfg = tiny_config(root / "run_a");
  ASSERT_NO_THROW(cfg.validate());

  const auto first = run_stages(cfg);
  ASSERT_EQ(first.size(), all_stages().size());
  for (const auto& o : first) EXPECT_TRUE(o.ran) << o.name;

  const RunPaths paths{cfg.out_dir};
  const auto& names = speechfeat::feature_names();

  // --- evaluate outputs
  const auto profiles = classify::read_profiles(paths.eval() / "profiles.csv");
  ASSERT_EQ(profiles.size(), 10u);
  EXPECT_EQ(profiles.front().subject_id, "c01");
  std::size_t patients = 0;
  for (const auto& p : profiles) {
    patients += p.patient ? 1 : 0;
    EXPECT_EQ(p.accuracies.size(), names.size());
    for (const auto& [feature, acc] : p.accuracies) {
      EXPECT_GE(acc, 0.0) << feature;
      EXPECT_LE(acc, 1.0) << feature;
    }
  }
  EXPECT_EQ(patients, 5u);

  const auto pred_lines = lines_of(slurp(paths.eval() / "predictions.csv"));
  ASSERT_GT(pred_lines.size(), 1u);
  EXPECT_EQ(pred_lines.front(), "feature,subject_id,start_s,window_s,correct,probability");
  // every feature/subject contributes all its swap-duplicated pairs; the base
  // count follows from the cropped stream length (window + mismatch + offset)
  const auto feat_meta = nlohmann::json::parse(slurp(paths.features() / "features.json"));
  const std::size_t n = feat_meta.at("samples").get<std::size_t>();
  EXPECT_GE(n, 7424u);  // at most a filter tail short of the two requested minutes
  EXPECT_LE(n, 8320u);  // the story rounds up to a word boundary, never by much
  const auto base_pairs = [n](std::size_t window, std::size_t offset) {
    return (n - 2 * window - offset) / window + 1;
  };
  EXPECT_EQ(pred_lines.size() - 1,
            10u * 2u * (8u * base_pairs(320, 64) + 3u * base_pairs(640, 64)));

  // --- classify outputs
  const auto stats = nlohmann::json::parse(slurp(paths.classify_dir() / "stats.json"));
  ASSERT_EQ(stats.at("tests").size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& t = stats.at("tests")[i];
    EXPECT_EQ(t.at("feature"), names[i]);
    EXPECT_GE(t.at("p_raw").get<double>(), 0.0);
    EXPECT_LE(t.at("p_adjusted").get<double>(), 1.0);
    EXPECT_GE(t.at("p_adjusted").get<double>(), t.at("p_raw").get<double>() - 1e-12);
  }

  const auto cls = nlohmann::json::parse(slurp(paths.classify_dir() / "classification.json"));
  ASSERT_EQ(cls.at("folds").size(), 10u);
  for (const auto& f : cls.at("folds")) {
    EXPECT_EQ(f.at("shapley").size(), classify::profile_feature_order().size());
    EXPECT_EQ(f.at("train_hash").get<std::string>().size(), 16u);
  }
  const auto roc = cls.at("roc");
  ASSERT_GE(roc.size(), 2u);
  EXPECT_EQ(roc.front()[0].get<double>(), 0.0);
  EXPECT_EQ(roc.front()[1].get<double>(), 0.0);
  EXPECT_EQ(roc.back()[0].get<double>(), 1.0);
  EXPECT_EQ(roc.back()[1].get<double>(), 1.0);
  ASSERT_EQ(cls.at("shapley").at("feature_order").size(), 12u);
  ASSERT_EQ(cls.at("shapley").at("mean_abs").size(), 12u);

  // --- sweep outputs: exactly sweep_minutes rows; the full-length slice must
  // reproduce the classify stage's numbers because it sees every segment
  const auto sweep_lines = lines_of(slurp(paths.sweep_dir() / "sweep.csv"));
  ASSERT_EQ(sweep_lines.size(), 1u + cfg.sweep_minutes);
  EXPECT_EQ(sweep_lines.front(), "minutes,accuracy,auc");
  const auto last = sweep_lines.back();
  std::istringstream last_row(last);
  std::string minutes_s, acc_s, auc_s;
  std::getline(last_row, minutes_s, ',');
  std::getline(last_row, acc_s, ',');
  std::getline(last_row, auc_s, ',');
  EXPECT_EQ(minutes_s, std::to_string(cfg.sweep_minutes));
  EXPECT_EQ(std::stod(acc_s), cls.at("metrics").at("accuracy").get<double>());
  EXPECT_EQ(std::stod(auc_s), cls.at("auc").get<double>());

  // --- report bundle
  const std::vector<std::string> report_files = {
      "fig2_accuracies.csv", "fig2_accuracies.svg", "fig2_stats.csv",
      "fig3a_roc.csv",       "fig3a_roc.svg",       "fig3b_shapley.csv",
      "fig3b_shapley.svg",   "fig3c_sweep.csv",     "fig3c_sweep.svg"};
  std::map<std::string, std::string> bundle;
  for (const auto& f : report_files) {
    const auto text = slurp(paths.report_dir() / f);
    EXPECT_FALSE(text.empty()) << f;
    if (f.size() > 4 && f.substr(f.size() - 4) == ".svg")
      EXPECT_NE(text.find("<svg"), std::string::npos) << f;
    bundle[f] = text;
  }
  const auto acc_rows = lines_of(bundle["fig2_accuracies.csv"]);
  EXPECT_EQ(acc_rows.size(), 1u + 10u * names.size());
  const auto roc_rows = lines_of(bundle["fig3a_roc.csv"]);
  EXPECT_EQ(roc_rows.front(), "fpr,tpr,threshold");
  EXPECT_EQ(roc_rows[1].substr(0, 4), "0,0,");
  EXPECT_EQ(roc_rows.back().substr(0, 4), "1,1,");
  const auto shap_rows = lines_of(bundle["fig3b_shapley.csv"]);
  ASSERT_EQ(shap_rows.size(), 13u);  // header + every profile feature
  double prev = 1e18;
  for (std::size_t i = 1; i < shap_rows.size(); ++i) {
    const auto cols = shap_rows[i];
    const auto second_comma = cols.find(',', cols.find(',') + 1);
    const double mean_abs = std::stod(cols.substr(second_comma + 1));
    EXPECT_LE(mean_abs, prev) << "fig3b not sorted by mean |phi|";
    prev = mean_abs;
  }
  EXPECT_EQ(bundle["fig3c_sweep.csv"], slurp(paths.sweep_dir() / "sweep.csv"));

  // --- idempotent rerun: same config, nothing recomputed, bundle untouched
  const auto second = run_stages(cfg);
  for (const auto& o : second) EXPECT_FALSE(o.ran) << o.name;
  for (const auto& f : report_files) EXPECT_EQ(slurp(paths.report_dir() / f), bundle[f]) << f;

  // --- a lost artifact retriggers exactly its stage, reproducing it bit for bit
  const auto pred_text = slurp(paths.eval() / "predictions.csv");
  fs::remove(paths.eval() / "predictions.csv");
  const auto third = run_stages(cfg);
  for (const auto& o : third) EXPECT_EQ(o.ran, o.name == "evaluate") << o.name;
  EXPECT_EQ(slurp(paths.eval() / "predictions.csv"), pred_text);

  // --- CLI over the finished run
  const auto conf = root / "tiny.conf";
  spit(conf, config_file_text(cfg));
  EXPECT_EQ(cli_main({"run", "--config", conf.string()}), 0);  // all up to date
  EXPECT_EQ(cli_main({"inspect", cfg.out_dir}), 0);
  EXPECT_EQ(cli_main({"inspect", "--config", conf.string()}), 0);
  EXPECT_EQ(cli_main({"report", cfg.out_dir}), 0);  // re-render in place
  for (const auto& f : report_files) EXPECT_EQ(slurp(paths.report_dir() / f), bundle[f]) << f;

  // --- NEUROTRACK_OUT redirects the run directory
  const auto env_dir = root / "run_env";
  ::setenv("NEUROTRACK_OUT", env_dir.string().c_str(), 1);
  EXPECT_EQ(cli_main({"run", "--config", conf.string(), "--stages", "classify"}), 2);
  ::unsetenv("NEUROTRACK_OUT");
  EXPECT_TRUE(fs::exists(env_dir));           // the redirected root was created
  EXPECT_FALSE(fs::exists(env_dir / "eval"));  // but nothing ran in it

  // --- numerical/format failure: exit 3 plus a diagnostics breadcrumb
  const auto broken = root / "run_broken";
  fs::create_directories(broken / "eval");
  fs::create_directories(broken / "classify");
  fs::create_directories(broken / "sweep");
  fs::copy_file(paths.eval() / "profiles.csv", broken / "eval" / "profiles.csv");
  fs::copy_file(paths.classify_dir() / "stats.json", broken / "classify" / "stats.json");
  fs::copy_file(paths.classify_dir() / "classification.json",
                broken / "classify" / "classification.json");
  spit(broken / "sweep" / "sweep.csv", "wrong,header\n1,2\n");
  EXPECT_EQ(cli_main({"report", broken.string()}), 3);
  const auto diag = slurp(broken / "diagnostics.txt");
  EXPECT_NE(diag.find("failure"), std::string::npos);
  EXPECT_NE(diag.find("sweep.csv"), std::string::npos);

  // --- full determinism: a fresh run under the same config is byte-identical
  auto cfg_b = cfg;
  cfg_b.out_dir = (root / "run_b").string();
  run_stages(cfg_b);
  const RunPaths paths_b{cfg_b.out_dir};
  for (const auto& f : report_files)
    EXPECT_EQ(slurp(paths_b.report_dir() / f), bundle[f]) << f;
  EXPECT_EQ(slurp(paths_b.eval() / "profiles.csv"), slurp(paths.eval() / "profiles.csv"));
  EXPECT_EQ(slurp(paths_b.eval() / "predictions.csv"), pred_text);
  EXPECT_EQ(slurp(paths_b.classify_dir() / "classification.json"),
            slurp(paths.classify_dir() / "classification.json"));
  EXPECT_EQ(slurp(paths_b.sweep_dir() / "sweep.csv"), slurp(paths.sweep_dir() / "sweep.csv"));

  fs::remove_all(root);
}
