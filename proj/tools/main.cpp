#include "penumbra/commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>
#include <vector>

namespace {

struct Sub {
  std::string name;
  std::string help;
  std::vector<std::string> positional_names;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penumbra: shadow boundaries, helices and parallel transport on embedded submanifolds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", penumbra::tool_version());

  const std::vector<Sub> subs = {
      {"validate", "sample the scene and check charts, constraints and fields", {"scene"}},
      {"shadow", "extract the shadow boundary and certify it", {"scene"}},
      {"helix", "helix-angle constancy and hypersurface classification", {"scene"}},
      {"transport", "parallel transport along scene loops or probe loops", {"scene"}},
      {"parallel-field", "build a parallel field from the seed or report the obstruction", {"scene"}},
      {"verify", "run one theorem check", {"theorem", "scene"}},
      {"tube", "emit the tube scene for the [tube] block", {"scene"}},
      {"verify-all", "run every theorem listed by each scene", {"paths"}},
  };

  penumbra::CommandOptions opts;
  std::vector<std::string> positional;
  int grid = 0;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    if (s.name == "verify-all") {
      sub->add_option("paths", positional, "scene files or directories")->required();
    } else if (s.name == "verify") {
      sub->add_option("args", positional, "<theorem-id> <scene>")->required()->expected(2);
    } else {
      sub->add_option("scene", positional, "scene file")->required()->expected(1);
    }
    sub->add_option("--grid", grid, "cells per axis")->check(CLI::PositiveNumber);
    sub->add_option("--tol", opts.tol, "tolerance override name=value (repeatable)");
    sub->add_option("--seed", opts.seed, "seed for random probe loops");
    sub->add_option("--format", opts.format, "artifact format")->check(CLI::IsMember({"csv", "obj", "json"}));
    sub->add_flag("--allow-empty", opts.allow_empty, "export empty shadow sets");
    sub->add_option("--out", opts.out, "write the artifact here instead of stdout");
    sub->add_option("--report", opts.report, "also write the JSON report here");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (grid > 0) opts.grid = grid;
  const std::string command = app.get_subcommands().front()->get_name();
  return penumbra::execute(command, positional, opts, std::cout, std::cerr);
}
