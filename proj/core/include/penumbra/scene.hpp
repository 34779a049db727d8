#pragma once

#include "penumbra/geometry.hpp"
#include "penumbra/helix.hpp"
#include "penumbra/report.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace penumbra {

struct FieldDecl {
  std::string name;
  std::string kind;  // constant | ambient | chart | transport | product
  std::string on;    // patch name (ambient, chart, transport)
  Vec base;          // transport: base parameters
  Vec seed;          // transport: seed vector
  std::vector<std::string> factors;  // product
};

struct LoopDecl {
  std::string name;
  std::string patch;
  std::vector<Vec> points;
};

struct TubeDecl {
  std::string curve;
  Vec direction;
  double epsilon = 0.0;
};

/// Names given to the patches and field synthesized from a [tube] block.
inline constexpr const char* kTubePatch = "tube";
inline constexpr const char* kTubeBase = "tube_base";
inline constexpr const char* kTubeField = "tube_direction";

/// A loaded scene: ambients, patches (possibly nested), fields, grid and
/// tolerances, plus the run configuration from the [scene] block.
struct Scene {
  std::string name;
  std::string source;
  std::string digest;

  ConstantTable constants;
  std::map<std::string, std::shared_ptr<const AmbientSpace>> ambients;
  std::map<std::string, PatchPtr> patches;
  std::vector<std::string> patch_order;
  std::map<std::string, FieldAlongM> fields;
  std::map<std::string, FieldDecl> field_decls;
  std::vector<int> resolution{64};
  Tolerances tol;

  std::string patch;
  std::string sub;
  std::string field;
  std::vector<std::string> normal_fields;
  std::vector<std::string> product;
  std::vector<std::string> product_fields;
  std::vector<std::string> verify;
  std::map<std::string, Verdict> expect;
  std::optional<TubeDecl> tube;
  std::vector<LoopDecl> loops;

  PatchPtr find_patch(const std::string& name) const;
  const FieldAlongM& find_field(const std::string& name) const;
  PatchPtr main_patch() const;
  PatchPtr sub_patch() const;
  const FieldAlongM& main_field() const;
  bool has_field() const { return !field.empty(); }

  /// Cells per axis for a patch of the given dimension.
  std::vector<int> cells(int dims) const;
  Grid grid_for(const SubmanifoldPatch& patch) const;
  void set_resolution(int cells_per_axis) { resolution = {cells_per_axis}; }
};

/// Throws SceneError (with "name:line: ") or ParseError wrapped likewise.
Scene parse_scene(const std::string& text, const std::string& name = "scene");
Scene load_scene_file(const std::string& path);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string scene_digest(const std::string& text);

struct ValidationReport {
  std::vector<PatchValidation> patches;
  std::vector<ValidationFailure> nesting_failures;
  bool passed = true;

  nlohmann::json to_json() const;
};

/// Samples every patch on the scene grid (fields declared on a patch are
/// checked for tangency there; constant fields on the main patch).
ValidationReport validate_scene(const Scene& scene);

/// Standalone scene text for a generated tube.
std::string tube_scene_text(const Scene& scene, const TubeScene& tube);

/// "t: 0 .. 6.28 periodic; s: -1 .. 1".
std::string format_domain(const std::vector<std::string>& params, const DomainBox& box);

}  // namespace penumbra
