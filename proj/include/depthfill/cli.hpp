#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "depthfill/dibr.hpp"
#include "depthfill/error.hpp"
#include "depthfill/pipeline.hpp"

#include "json.hpp"

namespace depthfill::cli {

// Flat key/value settings. Keys are the long flag names without dashes
// (e.g. "lambda-d", "patch").
using KeyValues = std::map<std::string, std::string>;

// Parses a config file: one `key = value` per line, `#` starts a comment,
// blank lines ignored. Throws InvalidArgument on malformed lines and
// IoError when the file cannot be read.
[[nodiscard]] KeyValues read_config_file(const std::filesystem::path& path);

// Every key parse_config accepts.
[[nodiscard]] const std::vector<std::string>& known_keys();

struct RunConfig {
  std::filesystem::path texture;
  std::filesystem::path depth;
  std::filesystem::path reference;
  bool skip_warp = false;
  std::filesystem::path virtual_image;
  std::filesystem::path virtual_depth;
  std::filesystem::path mask;
  std::filesystem::path out_dir;
  bool invert_depth = false;

  dibr::WarpConfig warp;
  pipeline::InpaintConfig inpaint = pipeline::default_inpaint_config();
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
};

// Builds a validated RunConfig from key/values. Unset parameters take the
// documented defaults (w0 and bconf follow the patch size). Throws
// InvalidArgument naming the offending key for unknown keys, unparsable
// values and violated invariants. `require_paths` checks that the input
// paths for `run` are set; whether they exist is left to the load stages.
[[nodiscard]] RunConfig parse_config(const KeyValues& values, bool require_paths = true);

// Every effective parameter, for the report.
[[nodiscard]] nlohmann::json echo_config(const RunConfig& cfg);

// Raised by run_pipeline; names the stage that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message, int exit_code)
      : Error("stage " + stage + ": " + message), stage_(std::move(stage)), exit_code_(exit_code) {}

  [[nodiscard]] const std::string& stage() const { return stage_; }
  [[nodiscard]] int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitPipeline = 3;

// Loads inputs, warps (or ingests a precomputed warp), inpaints, scores
// against the reference when given, and writes into cfg.out_dir:
//   virtual.png, virtual_depth.pgm, mask.pgm      pre-fill warp output
//   completed.png, completed_depth.pgm           inpainting result
//   lattice_overlay.png, boundary_overlay.png    debug views
//   report.json
// Returns the report. Throws StageError.
nlohmann::json run_pipeline(const RunConfig& cfg, std::ostream& log);

// Metrics only; `mask` may be empty, in which case holes-only fields are null.
[[nodiscard]] nlohmann::json evaluate_files(const std::filesystem::path& reference, const std::filesystem::path& test,
                                            const std::filesystem::path& mask);

// Warp only: writes virtual.png, virtual_depth.pgm and mask.pgm.
void warp_files(const RunConfig& cfg);

}  // namespace depthfill::cli
