// ffd: command-line front end for the fitness-for-duty pipeline.
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "ffd/csv_io.hpp"
#include "ffd/error.hpp"
#include "ffd/feature_io.hpp"
#include "ffd/model_io.hpp"
#include "ffd/pgm.hpp"
#include "ffd/pipeline.hpp"
#include "ffd/report.hpp"
#include "ffd/validation.hpp"

namespace fs = std::filesystem;
using namespace ffd;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig c = g.config.empty() ? default_pipeline_config() : load_pipeline_config(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.generator.seed = *g.seed;
  }
  return c;
}

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw InputError(fmt::format("{} '{}' not found", what, p.string()));
}

fs::path layout_path(const fs::path& features) {
  fs::path p = features;
  p += ".layout.json";
  return p;
}

std::vector<EyeSequence> load_sequence_files(const std::vector<std::string>& files) {
  std::vector<EyeSequence> all;
  for (const auto& f : files) {
    require_file(f, "sequence file");
    auto seqs = load_sequences(f);
    all.insert(all.end(), std::make_move_iterator(seqs.begin()), std::make_move_iterator(seqs.end()));
  }
  return all;
}

std::vector<FeatureVector> load_feature_files(const std::vector<std::string>& files) {
  std::vector<FeatureVector> all;
  for (const auto& f : files) {
    require_file(f, "feature file");
    auto v = read_features(f);
    all.insert(all.end(), v.begin(), v.end());
  }
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fitness-for-duty analysis of pupil/iris sequences"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Pipeline configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Base seed; overrides the config");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_out, synth_masks, separation;
  std::size_t mask_sequences = 4;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--separation", separation, "easy, moderate, hard or a number");
  synth->add_option("--masks", synth_masks, "Also write a PGM mask corpus here");
  synth->add_option("--mask-sequences", mask_sequences, "Training sequences rendered into the mask corpus");

  // localize
  auto* localize = app.add_subcommand("localize", "Localise pupil and iris circles from a mask manifest");
  std::string manifest, localize_out;
  localize->add_option("--manifest", manifest, "Manifest CSV (id,eye,condition,t,mask_path)")->required();
  localize->add_option("--out", localize_out, "Sequence CSV to write")->required();

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Build class baseline curves from training sequences");
  std::vector<std::string> baseline_data;
  std::string baseline_out;
  baseline->add_option("--data", baseline_data, "Training sequence CSV(s)")->required();
  baseline->add_option("--out", baseline_out, "Baseline JSON to write")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "Extract 50-slot feature vectors");
  std::vector<std::string> extract_data;
  std::string extract_baselines, extract_out, fusion;
  extract->add_option("--data", extract_data, "Sequence CSV(s)")->required();
  extract->add_option("--baselines", extract_baselines, "Baseline JSON from `ffd baseline`")->required();
  extract->add_option("--out", extract_out, "Feature JSON-lines file to write")->required();
  extract->add_option("--eye-fusion", fusion, "average or per_eye");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a classifier");
  std::vector<std::string> train_features;
  std::string family_name, train_out, validation_features, grid_file;
  bool run_cv = false;
  train_cmd->add_option("--features", train_features, "Training feature file(s)")->required();
  train_cmd->add_option("--family", family_name, "random_forest|rf, gradient_boosting|gbm, mlp")->required();
  train_cmd->add_option("--out", train_out, "Model JSON to write")->required();
  train_cmd->add_flag("--cv", run_cv, "Report stratified k-fold cross-validation first");
  train_cmd->add_option("--grid", grid_file, "Hyperparameter grid JSON {name: [values]}");
  train_cmd->add_option("--validation", validation_features, "Validation features for --grid");

  // predict
  auto* predict = app.add_subcommand("predict", "Classify feature vectors");
  std::string predict_model;
  std::vector<std::string> predict_features;
  predict->add_option("--model", predict_model, "Model JSON")->required();
  predict->add_option("--features", predict_features, "Feature file(s)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model and write the report");
  std::string eval_model, eval_out;
  std::vector<std::string> eval_features;
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--features", eval_features, "Labelled feature file(s)")->required();
  eval->add_option("--out", eval_out, "Report directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Write behavioural plot data");
  std::vector<std::string> report_data;
  std::string report_baselines, report_out;
  report->add_option("--data", report_data, "Sequence CSV(s)")->required();
  report->add_option("--baselines", report_baselines, "Baseline JSON (adds the class trend lines)");
  report->add_option("--out", report_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << " (see --help)\n";
    return 1;
  }

  try {
    const PipelineConfig cfg = resolve_config(g);

    if (*synth) {
      GeneratorConfig gc = cfg.generator;
      if (!separation.empty()) {
        try {
          gc.separation = separation_preset(separation);
        } catch (const InputError&) {
          char* end = nullptr;
          gc.separation = std::strtod(separation.c_str(), &end);
          if (end == separation.c_str() || *end != '\0' || gc.separation < 0)
            throw InputError(fmt::format("bad --separation '{}'", separation));
        }
      }
      const SyntheticDataset data = generate_dataset(gc);
      write_dataset(synth_out, data);
      write_json_file(fs::path(synth_out) / "generator.json", to_json(gc));
      fmt::print("wrote {} train, {} validation, {} test sequences to {}\n", data[Split::train].size(),
                 data[Split::validation].size(), data[Split::test].size(), synth_out);
      if (!synth_masks.empty()) {
        const auto& tr = data[Split::train];
        const std::size_t n = std::min(mask_sequences, tr.size());
        const std::size_t rows =
            write_mask_corpus(synth_masks, std::span(tr.data(), n), gc.image_size);
        fmt::print("wrote {} masks to {}\n", rows, synth_masks);
      }
    } else if (*localize) {
      require_file(manifest, "manifest");
      const auto seqs = localize_manifest(manifest, cfg.fps);
      write_sequences(localize_out, seqs);
      std::size_t frames = 0, valid = 0;
      for (const auto& s : seqs)
        for (const auto& f : s.frames) {
          ++frames;
          valid += f.valid;
        }
      fmt::print("localised {} frames ({} valid) in {} sequences\n", frames, valid, seqs.size());
    } else if (*baseline) {
      const auto seqs = load_sequence_files(baseline_data);
      write_baselines(baseline_out, build_baselines(seqs, cfg.preprocess));
      fmt::print("wrote baselines from {} sequences to {}\n", seqs.size(), baseline_out);
    } else if (*extract) {
      if (!fs::exists(extract_baselines))
        throw InputError(fmt::format("baseline file '{}' not found; run `ffd baseline` first", extract_baselines));
      const Baselines b = read_baselines(extract_baselines);
      const auto seqs = load_sequence_files(extract_data);
      const EyeFusion mode = fusion.empty() ? cfg.eye_fusion : parse_eye_fusion(fusion);
      const ExtractionResult r = extract_features(seqs, b, cfg.preprocess, mode);
      write_features(extract_out, r.vectors);
      write_json_file(layout_path(extract_out), feature_layout_json());
      for (const auto& s : r.skipped) std::cerr << "skipped " << s << '\n';
      fmt::print("wrote {} feature vectors to {} ({} skipped)\n", r.vectors.size(), extract_out, r.skipped.size());
    } else if (*train_cmd) {
      Dataset data{load_feature_files(train_features), Split::train};
      ModelSpec spec = model_spec(cfg, parse_family(family_name));
      if (run_cv) {
        const CvResult cv = kfold_cv(spec, data, cfg.cv_folds);
        fmt::print("{}-fold cv accuracy {} ± {}\n", cfg.cv_folds, format_percent(cv.mean_accuracy),
                   format_percent(cv.std_accuracy));
        for (Condition c : kConditions)
          if (cv.class_present[index_of(c)])
            fmt::print("  {} sensitivity {} ± {}\n", to_string(c), format_percent(cv.mean_sensitivity[index_of(c)]),
                       format_percent(cv.std_sensitivity[index_of(c)]));
      }
      if (!grid_file.empty()) {
        if (validation_features.empty()) throw InputError("--grid needs --validation features");
        require_file(grid_file, "grid file");
        const nlohmann::json grid_json = read_json_file(grid_file);
        if (!grid_json.is_object()) throw SchemaError("grid file must hold a JSON object");
        ParamGrid grid;
        for (const auto& [k, values] : grid_json.items()) {
          if (!values.is_array() || values.empty())
            throw SchemaError(fmt::format("grid entry '{}' must be a non-empty array", k));
          for (const auto& v : values) grid[k].push_back(param_from_json(v));
        }
        Dataset val{load_feature_files({validation_features}), Split::validation};
        const GridSearchResult gs = grid_search(spec, grid, data, val);
        fmt::print("grid search: {} combinations, best macro precision {:.4f}\n", gs.evaluated.size(),
                   gs.best_score);
        spec = gs.best;
      }
      const TrainedModel model = train(spec, data);
      save_model(train_out, model);
      fmt::print("trained {} on {} samples, wrote {}\n", to_string(spec.family), model.n_train(), train_out);
    } else if (*predict) {
      require_file(predict_model, "model file");
      const TrainedModel model = load_model(predict_model);
      for (const FeatureVector& fv : load_feature_files(predict_features)) {
        const Prediction p = model.predict(fv);
        std::string probs;
        for (Condition c : kConditions) probs += fmt::format(" p_{}={:.4f}", to_string(c), p.probabilities[index_of(c)]);
        fmt::print("{} condition={}{} fitness={} unfit_score={:.4f}\n", fv.id, to_string(p.condition), probs,
                   to_string(p.fit_class()), p.unfit_score());
      }
    } else if (*eval) {
      require_file(eval_model, "model file");
      const TrainedModel model = load_model(eval_model);
      const auto samples = load_feature_files(eval_features);
      const EvaluationResult r = evaluate_groups(model, samples);
      nlohmann::json meta{{"model", std::string(to_string(model.spec().family))},
                          {"seed", model.spec().seed},
                          {"n_train", model.n_train()},
                          {"n_test", samples.size()}};
      const RenderedReport rep = render_report(r.cm4, r.cm2, meta);
      write_report(eval_out, rep);
      std::cout << rep.table;
    } else if (*report) {
      const auto seqs = load_sequence_files(report_data);
      std::optional<Baselines> b;
      if (!report_baselines.empty()) {
        require_file(report_baselines, "baseline file");
        b = read_baselines(report_baselines);
      }
      const BehaviouralSummary s = behavioural_report(seqs, b ? &*b : nullptr, cfg.preprocess, report_out);
      fmt::print("wrote {} curve files to {}\n", s.curves.size(), report_out);
      for (Condition c : kConditions)
        fmt::print("  {} mean centre dispersion {:.3f} px\n", to_string(c), s.mean_dispersion[index_of(c)]);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
