// depthfill: virtual view synthesis with depth-aware MRF disocclusion filling.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "depthfill/cli.hpp"

namespace {

using depthfill::cli::KeyValues;

struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, CLI::Option*> switches;
};

void add_value(CLI::App& app, FlagSet& flags, const std::string& key, const std::string& help) {
  flags.options[key] = app.add_option("--" + key, flags.values[key], help);
}

void add_switch(CLI::App& app, FlagSet& flags, const std::string& name, const std::string& key,
                const std::string& help) {
  flags.switches[key + "=" + (name.rfind("no-", 0) == 0 ? "false" : "true")] = app.add_flag("--" + name, help);
}

void add_warp_flags(CLI::App& app, FlagSet& flags) {
  add_value(app, flags, "texture", "Reference texture (PNG/PPM/PGM)");
  add_value(app, flags, "depth", "Reference depth map, 8-bit, 255 = nearest");
  add_value(app, flags, "out", "Output directory");
  add_value(app, flags, "baseline-gain", "Disparity in pixels at depth 255 (default 10)");
  add_value(app, flags, "depth-offset", "Disparity in pixels at depth 0 (default 0)");
  add_value(app, flags, "direction", "Camera movement: left|right (default right)");
  add_switch(app, flags, "invert-depth", "invert-depth", "Input depth uses 0 = nearest");
}

void add_run_flags(CLI::App& app, FlagSet& flags) {
  add_warp_flags(app, flags);
  add_value(app, flags, "reference", "Ground-truth view; enables PSNR-Y/SSIM in the report");
  add_switch(app, flags, "skip-warp", "skip-warp", "Use a precomputed virtual view, depth and mask");
  add_value(app, flags, "virtual", "Precomputed virtual view (with --skip-warp)");
  add_value(app, flags, "virtual-depth", "Precomputed virtual depth (with --skip-warp)");
  add_value(app, flags, "mask", "Precomputed hole mask, 0 = hole (with --skip-warp)");
  add_value(app, flags, "patch", "Patch size WxH, even (default 14x14)");
  add_value(app, flags, "gap", "Node spacing GXxGY, smaller than the patch (default 7x7)");
  add_value(app, flags, "label-stride", "Spacing of candidate source patches (default 2)");
  add_value(app, flags, "lambda-d", "Depth term weight (default 3)");
  add_value(app, flags, "w0", "Coherence penalty (default 0.02*w*h)");
  add_value(app, flags, "depth-delta", "Depth pruning radius, normalized, 'inf' disables (default 0.1)");
  add_switch(app, flags, "no-classify", "classify", "Do not zero foreground-side nodes");
  add_value(app, flags, "bconf", "Relative-belief confidence threshold (default -0.6*w*h)");
  add_value(app, flags, "labels-min", "Minimum labels kept by pruning (default 3)");
  add_value(app, flags, "labels-max", "Maximum labels kept by pruning (default 50)");
  add_value(app, flags, "iters", "Forward/backward pass pairs (default 2)");
  add_value(app, flags, "damping", "Message damping in [0, 1) (default 0)");
  add_value(app, flags, "blend", "Patch blending: uniform|feathered (default feathered)");
  add_value(app, flags, "threads", "Worker threads, 0 = all cores (default 0)");
  add_value(app, flags, "seed", "Seed echoed in the report (the solver is deterministic)");
}

KeyValues collect(const FlagSet& flags, const std::string& config_path) {
  KeyValues kv;
  if (!config_path.empty()) kv = depthfill::cli::read_config_file(config_path);
  for (const auto& [key, opt] : flags.options) {
    if (opt->count() > 0) kv[key] = flags.values.at(key);
  }
  for (const auto& [assignment, opt] : flags.switches) {
    if (opt->count() == 0) continue;
    const auto eq = assignment.find('=');
    kv[assignment.substr(0, eq)] = assignment.substr(eq + 1);
  }
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = depthfill::cli;

  CLI::App app{"Virtual view synthesis with depth-aware MRF disocclusion filling"};
  app.require_subcommand(1);

  FlagSet run_flags;
  std::string run_config;
  auto* run = app.add_subcommand("run", "Warp, fill disocclusions and optionally score");
  run->add_option("--config", run_config, "key=value config file; flags override it");
  add_run_flags(*run, run_flags);

  FlagSet warp_flags;
  std::string warp_config;
  auto* warp = app.add_subcommand("warp", "Forward-warp only");
  warp->add_option("--config", warp_config, "key=value config file; flags override it");
  add_warp_flags(*warp, warp_flags);

  std::string eval_reference;
  std::string eval_test;
  std::string eval_mask;
  auto* eval = app.add_subcommand("eval", "PSNR-Y and SSIM, full frame and holes only");
  eval->add_option("--reference", eval_reference, "Ground-truth image")->required();
  eval->add_option("--test", eval_test, "Image to score")->required();
  eval->add_option("--mask", eval_mask, "Hole mask, 0 = hole");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*run) {
      cli::RunConfig cfg;
      try {
        cfg = cli::parse_config(collect(run_flags, run_config));
      } catch (const depthfill::IoError& e) {
        std::cerr << "depthfill: " << e.what() << "\n";
        return cli::kExitIo;
      } catch (const depthfill::Error& e) {
        std::cerr << "depthfill: " << e.what() << "\n";
        return cli::kExitUsage;
      }
      const auto report = cli::run_pipeline(cfg, std::cerr);
      std::cout << report.dump(2) << "\n";
    } else if (*warp) {
      cli::RunConfig cfg;
      try {
        cfg = cli::parse_config(collect(warp_flags, warp_config), false);
        if (cfg.texture.empty() || cfg.depth.empty() || cfg.out_dir.empty()) {
          throw depthfill::InvalidArgument("texture, depth and out are required");
        }
      } catch (const depthfill::IoError& e) {
        std::cerr << "depthfill: " << e.what() << "\n";
        return cli::kExitIo;
      } catch (const depthfill::Error& e) {
        std::cerr << "depthfill: " << e.what() << "\n";
        return cli::kExitUsage;
      }
      cli::warp_files(cfg);
    } else if (*eval) {
      std::cout << cli::evaluate_files(eval_reference, eval_test, eval_mask).dump(2) << "\n";
    }
  } catch (const cli::StageError& e) {
    std::cerr << "depthfill: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "depthfill: " << e.what() << "\n";
    return cli::kExitPipeline;
  }
  return cli::kExitOk;
}
