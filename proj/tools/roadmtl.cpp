/* Copyright 2026 The roadmtl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// roadmtl: preprocess, synth, train, eval and visualize.
//
// Every failure prints one line "E_<CODE>: <message>" to stderr and exits
// with a nonzero status.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "roadmtl/commands.hpp"
#include "roadmtl/error.hpp"

namespace {

using namespace roadmtl;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

std::optional<TrainMode> optional_mode(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_train_mode(s);
}

std::string data_root_or(const std::string& explicit_root, const std::string& sub) {
  return explicit_root.empty() ? resolve_data_root("", sub) : explicit_root;
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : RunConfig::load(path);
}

int fail(std::string_view code, const std::string& message) {
  std::string line = message;
  for (char& c : line)
    if (c == '\n') c = ' ';
  std::cerr << code << ": " << line << std::endl;
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Road-area segmentation with steering-angle multi-task learning"};
  app.require_subcommand(1);

  std::string config_path, mode_name, out, checkpoint, split_name = "val";
  std::string src_root, class_ids, what = "segmentation", pre_split = "train";
  std::optional<std::uint64_t> seed;
  std::size_t limit = 8;
  SynthOptions synth;

  auto* pre = app.add_subcommand("preprocess", "Convert a labeled multi-class set into binary road masks");
  pre->add_option("--src", src_root, "Labeled root with images/ and labels/")->required();
  pre->add_option("--out", out, "Output root (default $ROADMTL_DATA_ROOT/source)");
  pre->add_option("--config", config_path, "Run configuration for sizes and class ids");
  pre->add_option("--class-ids", class_ids, "Comma-separated drivable class ids");
  pre->add_option("--split", pre_split, "Manifest split to write")->capture_default_str();

  auto* syn = app.add_subcommand("synth", "Generate a synthetic source/target dataset");
  syn->add_option("--n-source", synth.n_source)->capture_default_str();
  syn->add_option("--n-target", synth.n_target)->capture_default_str();
  syn->add_option("--n-val", synth.n_val)->capture_default_str();
  syn->add_option("--n-test", synth.n_test)->capture_default_str();
  syn->add_option("--seed", seed, "Generator seed");
  syn->add_option("--out", out, "Output root (default $ROADMTL_DATA_ROOT)");
  syn->add_option("--config", config_path, "Run configuration for image sizes");

  auto* train = app.add_subcommand("train", "Train one model variant");
  train->add_option("--config", config_path, "Run configuration file");
  train->add_option("--mode", mode_name, "st, tl or mtl (overrides the config)");
  train->add_option("--seed", seed, "Seed (overrides the config)");
  train->add_option("--out", out, "Run directory (default: train.checkpoint_dir)");
  train->add_option("--checkpoint", checkpoint, "Resume from this checkpoint");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on an annotated target split");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--split", split_name)->capture_default_str();
  eval->add_option("--mode", mode_name, "Expected mode of the checkpoint");
  eval->add_option("--out", out, "Write the report here");

  auto* vis = app.add_subcommand("visualize", "Render steering-feature or segmentation overlays");
  vis->add_option("--checkpoint", checkpoint)->required();
  vis->add_option("--split", split_name)->capture_default_str();
  vis->add_option("--what", what, "steer_features or segmentation")->capture_default_str();
  vis->add_option("--out", out, "Output directory")->required();
  vis->add_option("--limit", limit, "Maximum number of samples")->capture_default_str();
  vis->add_option("--mode", mode_name, "Expected mode of the checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("E_USAGE", e.what());
    return kExitUsage;
  }

  try {
    if (*pre) {
      const RunConfig c = load_config(config_path);
      PreprocessOptions o;
      o.src_root = src_root;
      o.out_root = data_root_or(out, "source");
      o.class_ids = c.data.drivable_ids;
      if (!class_ids.empty()) {
        o.class_ids.clear();
        for (const std::string& t : CLI::detail::split(class_ids, ','))
          o.class_ids.push_back(std::stoi(t));
      }
      o.min_road_fraction = c.data.min_road_fraction;
      o.out_h = c.data.source_h;
      o.out_w = c.data.source_w;
      o.split = parse_split(pre_split);
      const PreprocessSummary s = run_preprocess(o);
      std::cout << "kept " << s.kept.size() << " dropped " << s.dropped.size()
                << " failed " << s.errors.size() << "\n";
      if (!s.errors.empty()) {
        for (const std::string& e : s.errors) std::cerr << "  " << e << "\n";
        return fail("E_DATA", std::to_string(s.errors.size()) +
                                  " input files could not be read");
      }
      return 0;
    }
    if (*syn) {
      const RunConfig c = load_config(config_path);
      synth.seed = seed.value_or(c.train.seed);
      synth.out_root = out.empty() ? resolve_data_root("", "") : out;
      synth.source_h = c.data.source_h;
      synth.source_w = c.data.source_w;
      synth.target_h = c.data.target_h;
      synth.target_w = c.data.target_w;
      run_synth(synth);
      std::cout << "wrote " << synth.n_source << " source, " << synth.n_target
                << " target, " << synth.n_val << " val, " << synth.n_test
                << " test samples to " << synth.out_root << "\n";
      return 0;
    }
    if (*train) {
      RunConfig c = load_config(config_path);
      if (const auto m = optional_mode(mode_name)) c.train.mode = *m;
      if (seed) c.train.seed = *seed;
      c.validate();
      const std::string dir = out.empty() ? c.train.checkpoint_dir : out;
      FitOptions hooks;
      hooks.on_validation = [](const ValidationRecord& v) {
        std::cout << "step " << v.step << " val miou " << format_number(v.miou)
                  << " precision " << format_number(v.precision) << " recall "
                  << format_number(v.recall) << std::endl;
      };
      const FitResult r = run_train(
          c, dir, checkpoint.empty() ? std::nullopt : std::optional(checkpoint), hooks);
      std::cout << "trained " << to_string(c.train.mode) << " to step " << r.steps;
      if (!r.best_checkpoint_path.empty())
        std::cout << "; best val miou " << format_number(r.best_val_miou) << " at "
                  << r.best_checkpoint_path;
      std::cout << "\n";
      return 0;
    }
    if (*eval) {
      const EvalReport r = run_eval(checkpoint, parse_split(split_name),
                                    optional_mode(mode_name));
      if (!out.empty()) {
        std::ofstream f(out, std::ios::trunc);
        if (!f) throw IoError("cannot write report " + out);
        f << r.to_text();
      }
      std::cout << "n=" << r.n_samples << " miou=" << format_number(r.miou)
                << " precision=" << format_number(r.precision)
                << " recall=" << format_number(r.recall) << "\n";
      return 0;
    }
    if (*vis) {
      const std::size_t n =
          run_visualize(checkpoint, parse_split(split_name), parse_visual_kind(what),
                        out, limit, optional_mode(mode_name));
      std::cout << "wrote " << n << " images to " << out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    return fail(error_code_name(e.code()), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("E_CONFIG", std::string("invalid number: ") + e.what());
  } catch (const std::exception& e) {
    return fail("E_INTERNAL", e.what());
  }
  return kExitUsage;
}
