#pragma once

#include "penumbra/report.hpp"
#include "penumbra/scene.hpp"
#include "penumbra/shadow.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace penumbra {

/// Version string stamped into every report.
std::string tool_version();

struct CommandOptions {
  std::optional<int> grid;
  std::vector<std::string> tol;  // "name=value"
  std::uint64_t seed = 0;
  std::string format;            // empty: command default
  bool allow_empty = false;
  std::string out;
  std::string report;
};

struct CommandOutcome {
  int exit_code = 0;
  nlohmann::json report;
  std::string artifact;  // text written to --out or stdout
};

/// Theorem ids accepted by `verify`.
const std::vector<std::string>& theorem_ids();

/// Runs one theorem on a loaded scene.
TheoremReport run_theorem(const Scene& scene, const std::string& id, std::uint64_t seed = 0);

/// Loads a scene and applies --grid / --tol.
Scene load_with_options(const std::string& path, const CommandOptions& opts);

/// Dispatches a command. `args` holds the positional arguments after the
/// command name. Throws Error on usage, parse and validation problems.
CommandOutcome run_command(const std::string& command, const std::vector<std::string>& args,
                           const CommandOptions& opts);

/// run_command plus file output; errors go to `err` and yield exit code 1.
int execute(const std::string& command, const std::vector<std::string>& args, const CommandOptions& opts,
            std::ostream& out, std::ostream& err);

/// Sorted keys, shortest round-trip floats, two-space indent, LF, trailing newline.
std::string canonical_json(const nlohmann::json& j);

/// Copy of a report with every "timings" member removed.
nlohmann::json without_timings(const nlohmann::json& j);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, const std::string& content);

std::string shadow_csv(const ShadowSet& set);
std::string shadow_obj(const ShadowSet& set);

}  // namespace penumbra
