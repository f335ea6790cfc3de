#include "depthfill/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "depthfill/metrics.hpp"
#include "depthfill/parallel.hpp"

namespace depthfill::cli {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw InvalidArgument(key + ": invalid value '" + value + "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& value) {
  if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value, "a number");
  }
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

// "14x14" or "14".
std::pair<int, int> parse_size(const std::string& key, const std::string& value) {
  const auto x = value.find('x');
  if (x == std::string::npos) {
    const int v = parse_int<int>(key, value);
    return {v, v};
  }
  return {parse_int<int>(key, value.substr(0, x)), parse_int<int>(key, value.substr(x + 1))};
}

std::string size_string(int a, int b) { return std::to_string(a) + "x" + std::to_string(b); }

template <typename Fn>
void with_key(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    if (what.rfind(key, 0) == 0) throw;
    throw InvalidArgument(key + ": " + what);
  }
}

json quality_json(const metrics::QualityReport& q) {
  json j;
  j["psnr_y_full"] = q.psnr_y_full;
  j["psnr_y_holes"] = q.psnr_y_holes ? json(*q.psnr_y_holes) : json(nullptr);
  j["ssim_full"] = q.ssim_full;
  j["ssim_holes"] = q.ssim_holes ? json(*q.ssim_holes) : json(nullptr);
  j["hole_pixel_count"] = q.hole_pixel_count;
  j["ssim_holes_rule"] = "mean over 11x11 windows whose center pixel is a hole pixel";
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const UnsupportedFormatError*>(&e) ||
      dynamic_cast<const CorruptFileError*>(&e)) {
    return kExitIo;
  }
  return kExitPipeline;
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), exit_code_for(e));
  }
}

}  // namespace

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  KeyValues values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path.string() + ":" + std::to_string(number) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    if (key.empty()) throw InvalidArgument(path.string() + ":" + std::to_string(number) + ": empty key");
    values[key] = trim(std::string_view(content).substr(eq + 1));
  }
  return values;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "texture", "depth",      "reference", "skip-warp",   "virtual",    "virtual-depth", "mask",
      "out",     "invert-depth", "baseline-gain", "depth-offset", "direction", "patch",   "gap",
      "label-stride", "lambda-d", "w0",      "depth-delta", "classify",   "bconf",         "labels-min",
      "labels-max", "iters",     "damping",  "blend",       "threads",    "seed"};
  return keys;
}

RunConfig parse_config(const KeyValues& values, bool require_paths) {
  for (const auto& [key, value] : values) {
    if (std::ranges::find(known_keys(), key) == known_keys().end()) {
      throw InvalidArgument(key + ": unknown configuration key");
    }
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  if (auto v = get("texture")) cfg.texture = *v;
  if (auto v = get("depth")) cfg.depth = *v;
  if (auto v = get("reference")) cfg.reference = *v;
  if (auto v = get("skip-warp")) cfg.skip_warp = parse_bool("skip-warp", *v);
  if (auto v = get("virtual")) cfg.virtual_image = *v;
  if (auto v = get("virtual-depth")) cfg.virtual_depth = *v;
  if (auto v = get("mask")) cfg.mask = *v;
  if (auto v = get("out")) cfg.out_dir = *v;
  if (auto v = get("invert-depth")) cfg.invert_depth = parse_bool("invert-depth", *v);

  if (auto v = get("baseline-gain")) cfg.warp.baseline_gain = parse_double("baseline-gain", *v);
  if (auto v = get("depth-offset")) cfg.warp.depth_offset = parse_double("depth-offset", *v);
  if (auto v = get("direction")) {
    if (*v == "left") {
      cfg.warp.direction = dibr::Direction::left;
    } else if (*v == "right") {
      cfg.warp.direction = dibr::Direction::right;
    } else {
      bad_value("direction", *v, "left or right");
    }
  }
  with_key("baseline-gain", [&] { cfg.warp.validate(); });

  lattice::LatticeConfig lc;
  if (auto v = get("patch")) std::tie(lc.patch_w, lc.patch_h) = parse_size("patch", *v);
  if (auto v = get("gap")) std::tie(lc.gap_x, lc.gap_y) = parse_size("gap", *v);
  if (auto v = get("label-stride")) lc.label_stride = parse_int<int>("label-stride", *v);
  with_key(get("gap") ? "gap" : "patch", [&] { lc.validate(); });

  auto& inpaint = cfg.inpaint;
  inpaint = pipeline::default_inpaint_config(lc);
  if (auto v = get("lambda-d")) inpaint.energy.lambda_d = parse_double("lambda-d", *v);
  if (auto v = get("w0")) inpaint.energy.w0 = parse_double("w0", *v);
  if (auto v = get("depth-delta")) inpaint.energy.depth_prune_delta = parse_double("depth-delta", *v);
  if (auto v = get("classify")) inpaint.classify_nodes = parse_bool("classify", *v);
  with_key("lambda-d", [&] { inpaint.energy.validate(); });

  if (auto v = get("bconf")) inpaint.solver.b_conf = parse_double("bconf", *v);
  if (auto v = get("labels-min")) inpaint.solver.labels_min = parse_int<std::size_t>("labels-min", *v);
  if (auto v = get("labels-max")) inpaint.solver.labels_max = parse_int<std::size_t>("labels-max", *v);
  if (auto v = get("iters")) inpaint.solver.max_iters = parse_int<int>("iters", *v);
  if (auto v = get("damping")) inpaint.solver.damping = parse_double("damping", *v);
  with_key("bconf", [&] { inpaint.solver.validate(); });

  if (auto v = get("blend")) {
    if (*v == "uniform") {
      inpaint.composite.blend = compositor::Blend::uniform;
    } else if (*v == "feathered") {
      inpaint.composite.blend = compositor::Blend::feathered;
    } else {
      bad_value("blend", *v, "uniform or feathered");
    }
  }
  if (auto v = get("threads")) cfg.threads = parse_int<unsigned>("threads", *v);
  if (auto v = get("seed")) cfg.seed = parse_int<std::uint64_t>("seed", *v);

  if (require_paths) {
    auto need = [](const std::filesystem::path& p, const char* key) {
      if (p.empty()) throw InvalidArgument(std::string(key) + ": required");
    };
    if (cfg.skip_warp) {
      need(cfg.virtual_image, "virtual");
      need(cfg.virtual_depth, "virtual-depth");
      need(cfg.mask, "mask");
    } else {
      need(cfg.texture, "texture");
      need(cfg.depth, "depth");
    }
    need(cfg.out_dir, "out");
  }
  return cfg;
}

json echo_config(const RunConfig& cfg) {
  const auto& in = cfg.inpaint;
  json j;
  j["texture"] = cfg.texture.string();
  j["depth"] = cfg.depth.string();
  j["reference"] = cfg.reference.string();
  j["skip-warp"] = cfg.skip_warp;
  j["virtual"] = cfg.virtual_image.string();
  j["virtual-depth"] = cfg.virtual_depth.string();
  j["mask"] = cfg.mask.string();
  j["out"] = cfg.out_dir.string();
  j["invert-depth"] = cfg.invert_depth;
  j["depth-convention"] = "8-bit, 255 = nearest";
  j["baseline-gain"] = cfg.warp.baseline_gain;
  j["depth-offset"] = cfg.warp.depth_offset;
  j["direction"] = cfg.warp.direction == dibr::Direction::left ? "left" : "right";
  j["patch"] = size_string(in.lattice.patch_w, in.lattice.patch_h);
  j["gap"] = size_string(in.lattice.gap_x, in.lattice.gap_y);
  j["label-stride"] = in.lattice.label_stride;
  j["lambda-d"] = in.energy.lambda_d;
  j["depth-term-enabled"] = in.energy.lambda_d != 0.0;
  j["w0"] = in.energy.w0;
  j["depth-delta"] = std::isinf(in.energy.depth_prune_delta) ? json("inf") : json(in.energy.depth_prune_delta);
  j["classify"] = in.classify_nodes;
  j["bconf"] = in.solver.b_conf;
  j["labels-min"] = in.solver.labels_min;
  j["labels-max"] = in.solver.labels_max;
  j["iters"] = in.solver.max_iters;
  j["damping"] = in.solver.damping;
  j["blend"] = in.composite.blend == compositor::Blend::uniform ? "uniform" : "feathered";
  j["threads"] = cfg.threads;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  return j;
}

json run_pipeline(const RunConfig& cfg, std::ostream& log) {
  parallel::set_thread_count(cfg.threads);

  Image virtual_image;
  DepthMap virtual_depth;
  HoleMask holes;
  if (cfg.skip_warp) {
    virtual_image = stage("load_virtual", [&] { return load_image(cfg.virtual_image); });
    virtual_depth = stage("load_virtual_depth", [&] { return load_depth(cfg.virtual_depth); });
    if (cfg.invert_depth) virtual_depth = invert_depth(virtual_depth);
    holes = stage("load_mask", [&] { return load_mask(cfg.mask); });
  } else {
    const Image texture = stage("load_texture", [&] { return load_image(cfg.texture); });
    DepthMap depth = stage("load_depth", [&] { return load_depth(cfg.depth); });
    if (cfg.invert_depth) depth = invert_depth(depth);
    auto warped = stage("warp", [&] { return dibr::forward_warp(texture, depth, cfg.warp); });
    virtual_image = std::move(warped.virtual_image);
    virtual_depth = std::move(warped.virtual_depth);
    holes = std::move(warped.holes);
  }
  std::optional<Image> reference;
  if (!cfg.reference.empty()) reference = stage("load_reference", [&] { return load_image(cfg.reference); });
  log << "virtual view " << virtual_image.width() << "x" << virtual_image.height() << ", " << holes.hole_count()
      << " hole pixels\n";

  const auto result = stage("inpaint", [&] {
    return pipeline::inpaint(virtual_image, virtual_depth, holes, cfg.warp, cfg.inpaint);
  });
  if (result.solver_invoked) {
    log << result.lattice.nodes.size() << " nodes (" << result.zeroed_nodes << " zeroed), "
        << result.candidate_labels << " candidate labels, energy " << result.energy.total() << "\n";
  }

  json report;
  report["config"] = echo_config(cfg);
  report["warp"] = {{"width", virtual_image.width()},
                    {"height", virtual_image.height()},
                    {"hole_pixels", holes.hole_count()},
                    {"precomputed", cfg.skip_warp}};
  report["lattice"] = {{"nodes", result.lattice.nodes.size()},
                       {"edges", result.lattice.edges.size()},
                       {"zeroed_nodes", result.zeroed_nodes},
                       {"candidate_labels", result.candidate_labels},
                       {"labels_after_depth_pruning", result.labels_after_depth_pruning}};
  report["energy"] = {{"node", result.energy.node},
                      {"pairwise", result.energy.pairwise},
                      {"coherence", result.energy.coherence},
                      {"total", result.energy.total()}};
  report["solver"] = {{"invoked", result.solver_invoked},
                      {"passes", result.solve.passes},
                      {"labels_pruned", result.solve.labels_pruned},
                      {"converged", result.solve.converged}};
  report["quality"] = nullptr;
  if (reference) {
    report["quality"] = stage("evaluate", [&] { return quality_json(metrics::evaluate(*reference, result.completed, holes)); });
  }

  stage("write_outputs", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    save_image(virtual_image, cfg.out_dir / "virtual.png");
    save_depth(virtual_depth, cfg.out_dir / "virtual_depth.pgm");
    save_mask(holes, cfg.out_dir / "mask.pgm");
    save_image(result.completed, cfg.out_dir / "completed.png");
    save_depth(result.completed_depth, cfg.out_dir / "completed_depth.pgm");
    save_image(lattice::render_overlay(virtual_image, holes, result.lattice), cfg.out_dir / "lattice_overlay.png");
    save_image(compositor::render_boundary_overlay(result.completed, holes), cfg.out_dir / "boundary_overlay.png");
    std::ofstream out(cfg.out_dir / "report.json");
    if (!out) throw IoError("cannot write " + (cfg.out_dir / "report.json").string());
    out << report.dump(2) << "\n";
    return 0;
  });
  return report;
}

json evaluate_files(const std::filesystem::path& reference, const std::filesystem::path& test,
                    const std::filesystem::path& mask) {
  const Image ref = stage("load_reference", [&] { return load_image(reference); });
  const Image img = stage("load_test", [&] { return load_image(test); });
  HoleMask holes(ref.width(), ref.height());
  if (!mask.empty()) holes = stage("load_mask", [&] { return load_mask(mask); });
  return stage("evaluate", [&] { return quality_json(metrics::evaluate(ref, img, holes)); });
}

void warp_files(const RunConfig& cfg) {
  const Image texture = stage("load_texture", [&] { return load_image(cfg.texture); });
  DepthMap depth = stage("load_depth", [&] { return load_depth(cfg.depth); });
  if (cfg.invert_depth) depth = invert_depth(depth);
  const auto warped = stage("warp", [&] { return dibr::forward_warp(texture, depth, cfg.warp); });
  stage("write_outputs", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    save_image(warped.virtual_image, cfg.out_dir / "virtual.png");
    save_depth(warped.virtual_depth, cfg.out_dir / "virtual_depth.pgm");
    save_mask(warped.holes, cfg.out_dir / "mask.pgm");
    return 0;
  });
}

}  // namespace depthfill::cli
