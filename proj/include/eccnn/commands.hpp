#pragma once

// Precision-neutral entry points of the command-line workflow. Both numeric
// builds export run_command; callers pick one by namespace.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eccnn/config.hpp"
#include "eccnn/precision.hpp"

namespace eccnn {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitRuntime = 3,
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen",  "train",   "eval",  "infer",
                                              "gradcheck", "ablate", "bench", "stats"};
  return names;
}

struct CommandRequest {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> axis;    // conditioning | stage | init
  std::optional<std::string> stages;  // e.g. conv2_x,conv3_x
  std::optional<std::string> depth;   // mini | mini-deep
  std::optional<std::string> edges;   // computed | manifest | <dir or file>
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> input;
  // section.key=value, applied after the config file.
  std::vector<std::string> overrides;
};

// Config file (or empty) with the request's flags folded in.
ConfigFile resolve_config(const CommandRequest& request);

// The active build's namespace is inline, matching ECCNN_BEGIN_NAMESPACE.
#if ECCNN_USE_DOUBLE
namespace f32 {
int run_command(const CommandRequest& request, std::ostream& out, std::ostream& err);
}
inline namespace f64 {
int run_command(const CommandRequest& request, std::ostream& out, std::ostream& err);
}
#else
inline namespace f32 {
int run_command(const CommandRequest& request, std::ostream& out, std::ostream& err);
}
namespace f64 {
int run_command(const CommandRequest& request, std::ostream& out, std::ostream& err);
}
#endif

}  // namespace eccnn
