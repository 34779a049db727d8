#include "penumbra/scene.hpp"

#include "penumbra/error.hpp"
#include "penumbra/shadow.hpp"
#include "penumbra/shapes.hpp"
#include "penumbra/transport.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace penumbra {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

struct Block {
  std::string kind;
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

class Loader {
 public:
  Loader(const std::string& text, std::string name) : text_(text), name_(std::move(name)) {}

  Scene run();

 private:
  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw SceneError(name_ + ":" + std::to_string(line) + ": " + msg);
  }

  void read_blocks();
  const Entry* get(const Block& b, const std::string& key) const {
    auto it = b.entries.find(key);
    return it == b.entries.end() ? nullptr : &it->second;
  }
  const Entry& need(const Block& b, const std::string& key) const {
    const Entry* e = get(b, key);
    if (e == nullptr) fail(b.line, "[" + b.kind + (b.name.empty() ? "" : " " + b.name) + "] needs '" + key + "'");
    return *e;
  }
  void allow_keys(const Block& b, std::initializer_list<const char*> keys) const {
    for (const auto& k : b.order) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        fail(b.entries.at(k).line, "unknown key '" + k + "' in [" + b.kind + "]");
      }
    }
  }

  ChartExpr expr(const Entry& e, const std::vector<std::string>& params, const ConstantTable& constants) const;
  double number(const Entry& e) const;
  Vec vector(const Entry& e) const;
  Vec vector_text(const std::string& text, int line) const;
  DomainBox domain(const Entry& e, const std::vector<std::string>& params, DomainBox fallback, bool has_fallback) const;
  std::vector<std::string> names(const Entry& e) const;

  void load_ambient(const Block& b);
  PatchPtr load_submanifold(const Block& b);
  void load_field(const Block& b);

  std::string text_;
  std::string name_;
  std::vector<Block> blocks_;
  Scene scene_;
  std::set<std::string> in_progress_;
  std::map<std::string, const Block*> sub_blocks_;
};

void Loader::read_blocks() {
  std::istringstream in(text_);
  std::string raw;
  int line = 0;
  Block* current = nullptr;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::size_t hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated block header");
      const std::vector<std::string> words = [&] {
        std::vector<std::string> w;
        std::istringstream hs(s.substr(1, s.size() - 2));
        std::string t;
        while (hs >> t) w.push_back(t);
        return w;
      }();
      if (words.empty() || words.size() > 2) fail(line, "block header must be [kind] or [kind name]");
      Block b;
      b.kind = words[0];
      b.name = words.size() == 2 ? words[1] : "";
      b.line = line;
      static const std::set<std::string> named = {"ambient", "submanifold", "field", "loop"};
      static const std::set<std::string> unnamed = {"constants", "grid", "tolerances", "scene", "tube"};
      if (named.count(b.kind) != 0) {
        if (b.name.empty()) fail(line, "[" + b.kind + "] needs a name");
      } else if (unnamed.count(b.kind) != 0) {
        if (!b.name.empty()) fail(line, "[" + b.kind + "] takes no name");
      } else {
        fail(line, "unknown block kind '" + b.kind + "'");
      }
      const std::string key = b.kind + " " + b.name;
      if (!seen.insert(key).second) fail(line, "duplicate block [" + trim(key) + "]");
      blocks_.push_back(std::move(b));
      current = &blocks_.back();
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    if (current == nullptr) fail(line, "entry outside of any block");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(line, "empty key");
    if (current->entries.count(key) != 0) fail(line, "duplicate key '" + key + "'");
    current->entries[key] = {trim(s.substr(eq + 1)), line};
    current->order.push_back(key);
  }
}

ChartExpr Loader::expr(const Entry& e, const std::vector<std::string>& params, const ConstantTable& constants) const {
  try {
    return parse_chart(e.value, params, constants);
  } catch (const ParseError& err) {
    fail(e.line, "column " + std::to_string(err.location().column) + ": " + err.message());
  }
}

Vec Loader::vector_text(const std::string& text, int line) const {
  std::string t = trim(text);
  if (t.empty()) fail(line, "empty vector");
  if (t.front() != '(') t = "(" + t + ")";
  try {
    return parse_chart(t, {}, scene_.constants).eval(Vec(0));
  } catch (const ParseError& err) {
    fail(line, "column " + std::to_string(err.location().column) + ": " + err.message());
  } catch (const DomainError& err) {
    fail(line, err.what());
  }
}

Vec Loader::vector(const Entry& e) const { return vector_text(e.value, e.line); }

double Loader::number(const Entry& e) const {
  const Vec v = vector(e);
  if (v.size() != 1) fail(e.line, "expected a single number");
  return v[0];
}

std::vector<std::string> Loader::names(const Entry& e) const {
  std::vector<std::string> out = split(e.value, ',');
  for (const auto& n : out) {
    if (n.empty()) fail(e.line, "empty name in list");
  }
  return out;
}

DomainBox Loader::domain(const Entry& e, const std::vector<std::string>& params, DomainBox fallback,
                         bool has_fallback) const {
  DomainBox box = has_fallback ? std::move(fallback) : DomainBox(params.size());
  std::vector<bool> given(params.size(), false);
  for (const std::string& part : split(e.value, ';')) {
    const std::size_t colon = part.find(':');
    if (colon == std::string::npos) fail(e.line, "domain entry '" + part + "' needs 'name: lo .. hi'");
    const std::string pname = trim(part.substr(0, colon));
    auto it = std::find(params.begin(), params.end(), pname);
    if (it == params.end()) fail(e.line, "domain names unknown parameter '" + pname + "'");
    const auto idx = static_cast<std::size_t>(it - params.begin());
    if (given[idx]) fail(e.line, "parameter '" + pname + "' bounded twice");
    given[idx] = true;
    std::string rest = trim(part.substr(colon + 1));
    bool periodic = false;
    const std::string kPeriodic = "periodic";
    if (rest.size() >= kPeriodic.size() && rest.compare(rest.size() - kPeriodic.size(), kPeriodic.size(), kPeriodic) == 0) {
      periodic = true;
      rest = trim(rest.substr(0, rest.size() - kPeriodic.size()));
    }
    const std::size_t dots = rest.find("..");
    if (dots == std::string::npos) fail(e.line, "domain entry for '" + pname + "' needs 'lo .. hi'");
    ParamInterval iv;
    iv.lo = vector_text(rest.substr(0, dots), e.line)[0];
    iv.hi = vector_text(rest.substr(dots + 2), e.line)[0];
    iv.periodic = periodic;
    if (!(iv.hi > iv.lo)) fail(e.line, "empty interval for '" + pname + "'");
    box[idx] = iv;
  }
  if (!has_fallback) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!given[i]) fail(e.line, "no bounds for parameter '" + params[i] + "'");
    }
  }
  return box;
}

void Loader::load_ambient(const Block& b) {
  allow_keys(b, {"dim", "coords", "constraint", "product"});
  std::shared_ptr<const AmbientSpace> amb;
  if (const Entry* p = get(b, "product")) {
    const auto parts = names(*p);
    if (parts.size() != 2) fail(p->line, "product ambient needs two factors");
    std::vector<std::shared_ptr<const AmbientSpace>> f;
    for (const auto& n : parts) {
      auto it = scene_.ambients.find(n);
      if (it == scene_.ambients.end()) fail(p->line, "unknown ambient '" + n + "' (declare factors first)");
      f.push_back(it->second);
    }
    amb = std::make_shared<const AmbientSpace>(AmbientSpace::product(*f[0], *f[1]));
  } else {
    std::vector<std::string> coords;
    if (const Entry* c = get(b, "coords")) {
      coords = names(*c);
    } else {
      const Entry& d = need(b, "dim");
      const double dim = number(d);
      if (dim < 1 || dim > kMaxExprParams || dim != static_cast<int>(dim)) fail(d.line, "bad ambient dimension");
      for (int i = 1; i <= static_cast<int>(dim); ++i) coords.push_back("x" + std::to_string(i));
    }
    if (const Entry* d = get(b, "dim"); d != nullptr && static_cast<std::size_t>(number(*d)) != coords.size()) {
      fail(d->line, "dim disagrees with coords");
    }
    if (const Entry* c = get(b, "constraint")) {
      amb = std::make_shared<const AmbientSpace>(AmbientSpace::constrained(expr(*c, coords, scene_.constants)));
      if (amb->dim() < 1) fail(c->line, "constraints leave no dimensions");
    } else {
      amb = std::make_shared<const AmbientSpace>(AmbientSpace::flat(coords));
    }
  }
  scene_.ambients[b.name] = amb;
}

PatchPtr Loader::load_submanifold(const Block& b) {
  if (auto it = scene_.patches.find(b.name); it != scene_.patches.end()) return it->second;
  if (!in_progress_.insert(b.name).second) fail(b.line, "nesting cycle through '" + b.name + "'");
  allow_keys(b, {"ambient", "parent", "params", "chart", "shape", "domain"});

  const Entry* amb_e = get(b, "ambient");
  const Entry* par_e = get(b, "parent");
  if ((amb_e == nullptr) == (par_e == nullptr)) fail(b.line, "submanifold needs exactly one of 'ambient' or 'parent'");

  std::vector<std::string> params;
  ChartExpr chart;
  DomainBox fallback;
  bool has_fallback = false;
  if (const Entry* s = get(b, "shape")) {
    if (get(b, "chart") != nullptr || get(b, "params") != nullptr) fail(s->line, "'shape' excludes 'chart' and 'params'");
    const ShapeSpec* spec = nullptr;
    try {
      spec = &builtin_shape(s->value);
    } catch (const Error& err) {
      fail(s->line, err.what());
    }
    ConstantTable constants = spec->constants;
    for (const auto& [k, v] : scene_.constants) {
      if (constants.count(k) != 0) constants[k] = v;
    }
    params = spec->params;
    chart = parse_chart(spec->chart, params, constants);
    fallback = spec->domain;
    has_fallback = true;
  } else {
    params = names(need(b, "params"));
    chart = expr(need(b, "chart"), params, scene_.constants);
  }
  if (params.empty()) fail(b.line, "submanifold needs at least one parameter");

  DomainBox box;
  if (const Entry* d = get(b, "domain")) {
    box = domain(*d, params, fallback, has_fallback);
  } else if (has_fallback) {
    box = fallback;
  } else {
    fail(b.line, "submanifold needs 'domain'");
  }

  PatchPtr patch;
  if (amb_e != nullptr) {
    auto it = scene_.ambients.find(amb_e->value);
    if (it == scene_.ambients.end()) fail(amb_e->line, "unknown ambient '" + amb_e->value + "'");
    if (chart.outputs() != it->second->embedding_dim()) {
      fail(b.line, "chart has " + std::to_string(chart.outputs()) + " outputs but ambient '" + amb_e->value +
                       "' lives in dimension " + std::to_string(it->second->embedding_dim()));
    }
    if (chart.arity() > it->second->dim()) fail(b.line, "submanifold dimension exceeds the ambient dimension");
    patch = std::make_shared<const SubmanifoldPatch>(b.name, chart, box, it->second);
  } else {
    auto it = sub_blocks_.find(par_e->value);
    if (it == sub_blocks_.end()) fail(par_e->line, "unknown parent '" + par_e->value + "'");
    PatchPtr parent = load_submanifold(*it->second);
    if (chart.outputs() != parent->dim()) {
      fail(b.line, "sub-chart has " + std::to_string(chart.outputs()) + " outputs but parent '" + parent->name() +
                       "' has " + std::to_string(parent->dim()) + " parameters");
    }
    if (chart.arity() >= parent->dim()) fail(b.line, "nested patch must have lower dimension than its parent");
    patch = std::make_shared<const SubmanifoldPatch>(b.name, chart, box, parent);
  }
  in_progress_.erase(b.name);
  scene_.patches[b.name] = patch;
  scene_.patch_order.push_back(b.name);
  return patch;
}

void Loader::load_field(const Block& b) {
  allow_keys(b, {"kind", "value", "expr", "on", "ambient", "base", "seed", "factors", "scale"});
  FieldDecl decl;
  decl.name = b.name;
  decl.kind = need(b, "kind").value;
  FieldAlongM field;
  auto patch_of = [&](const Entry& e) {
    auto it = scene_.patches.find(e.value);
    if (it == scene_.patches.end()) fail(e.line, "unknown patch '" + e.value + "'");
    return it->second;
  };
  if (const Entry* on = get(b, "on")) {
    patch_of(*on);
    decl.on = on->value;
  }
  if (decl.kind == "constant") {
    field = FieldAlongM::constant(vector(need(b, "value")));
  } else if (decl.kind == "ambient") {
    std::shared_ptr<const AmbientSpace> amb;
    if (const Entry* a = get(b, "ambient")) {
      auto it = scene_.ambients.find(a->value);
      if (it == scene_.ambients.end()) fail(a->line, "unknown ambient '" + a->value + "'");
      amb = it->second;
    } else {
      amb = patch_of(need(b, "on"))->ambient_ptr();
    }
    const Entry& e = need(b, "expr");
    ChartExpr ex = expr(e, amb->coords(), scene_.constants);
    if (ex.outputs() != amb->embedding_dim()) fail(e.line, "field expression has the wrong number of components");
    field = FieldAlongM::ambient_expr(std::move(ex));
  } else if (decl.kind == "chart") {
    PatchPtr p = patch_of(need(b, "on"));
    const Entry& e = need(b, "expr");
    ChartExpr ex = expr(e, p->chart().params(), scene_.constants);
    if (ex.outputs() != p->ambient().embedding_dim()) fail(e.line, "field expression has the wrong number of components");
    field = FieldAlongM::chart_expr(std::move(ex), p);
  } else if (decl.kind == "transport") {
    const Entry& on = need(b, "on");
    PatchPtr p = patch_of(on);
    decl.base = vector(need(b, "base"));
    decl.seed = vector(need(b, "seed"));
    if (decl.base.size() != p->dim()) fail(need(b, "base").line, "base point has the wrong number of parameters");
    if (decl.seed.size() != p->ambient().embedding_dim()) fail(need(b, "seed").line, "seed has the wrong dimension");
    Vec w0 = decl.seed;
    try {
      const FrameData frame = frame_at(*p, decl.base, scene_.tol);
      if ((frame.ambient_projector * w0 - w0).norm() > scene_.tol.on_ambient_tol * std::max(1.0, w0.norm())) {
        fail(need(b, "seed").line, "seed is not tangent to the ambient at the base point");
      }
    } catch (const GeometryError& err) {
      fail(on.line, std::string("transport field: ") + err.what());
    }
    field = staircase_field(p, decl.base, w0, scene_.tol);
  } else if (decl.kind == "product") {
    const Entry& f = need(b, "factors");
    decl.factors = names(f);
    if (decl.factors.size() != 2) fail(f.line, "product field needs two factors");
    std::vector<int> dims;
    std::vector<FieldAlongM> parts;
    for (const auto& n : decl.factors) {
      auto it = scene_.fields.find(n);
      if (it == scene_.fields.end()) fail(f.line, "unknown field '" + n + "' (declare factors first)");
      const FieldDecl& d = scene_.field_decls.at(n);
      if (it->second.kind() == FieldAlongM::Kind::kConstant) {
        dims.push_back(static_cast<int>(it->second.constant_value().size()));
      } else if (!d.on.empty()) {
        dims.push_back(scene_.patches.at(d.on)->ambient().embedding_dim());
      } else {
        fail(f.line, "factor field '" + n + "' needs 'on' to fix its dimension");
      }
      parts.push_back(it->second);
    }
    field = FieldAlongM::product(parts[0], dims[0], parts[1], dims[1]);
  } else {
    fail(need(b, "kind").line, "unknown field kind '" + decl.kind + "'");
  }
  if (const Entry* s = get(b, "scale")) field = field.scaled(number(*s));
  scene_.fields[b.name] = field;
  scene_.field_decls[b.name] = decl;
}

Scene Loader::run() {
  read_blocks();
  scene_.name = name_;
  scene_.source = text_;
  scene_.digest = scene_digest(text_);

  for (const Block& b : blocks_) {
    if (b.kind != "constants") continue;
    for (const auto& k : b.order) {
      const Entry& e = b.entries.at(k);
      scene_.constants[k] = number(e);
    }
  }
  for (const Block& b : blocks_) {
    if (b.kind == "tolerances") {
      for (const auto& k : b.order) {
        try {
          scene_.tol.set(k, number(b.entries.at(k)));
        } catch (const SceneError&) {
          throw;
        } catch (const Error& err) {
          fail(b.entries.at(k).line, err.what());
        }
      }
    } else if (b.kind == "grid") {
      allow_keys(b, {"resolution"});
      const Entry& r = need(b, "resolution");
      const Vec v = vector(r);
      scene_.resolution.clear();
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] < 1 || v[i] != static_cast<int>(v[i])) fail(r.line, "grid resolution must be positive integers");
        scene_.resolution.push_back(static_cast<int>(v[i]));
      }
      if (scene_.resolution.empty()) fail(r.line, "empty grid resolution");
    }
  }
  for (const Block& b : blocks_) {
    if (b.kind == "ambient") load_ambient(b);
    if (b.kind == "submanifold") {
      if (scene_.ambients.count(b.name) != 0) fail(b.line, "name '" + b.name + "' already used by an ambient");
      sub_blocks_[b.name] = &b;
    }
  }
  for (const Block& b : blocks_) {
    if (b.kind == "submanifold") load_submanifold(b);
  }

  const Block* scene_block = nullptr;
  for (const Block& b : blocks_) {
    if (b.kind == "scene") scene_block = &b;
    if (b.kind == "tube") {
      allow_keys(b, {"curve", "direction", "epsilon"});
      TubeDecl t;
      t.curve = need(b, "curve").value;
      t.direction = vector(need(b, "direction"));
      t.epsilon = number(need(b, "epsilon"));
      auto it = scene_.patches.find(t.curve);
      if (it == scene_.patches.end()) fail(need(b, "curve").line, "unknown curve '" + t.curve + "'");
      try {
        TubeScene ts = tube_scene_generator(*it->second, t.direction, t.epsilon, scene_.grid_for(*it->second), scene_.tol);
        auto tube = std::make_shared<const SubmanifoldPatch>(kTubePatch, ts.tube->chart(), ts.tube->domain(),
                                                             ts.tube->ambient_ptr());
        auto base = std::make_shared<const SubmanifoldPatch>(kTubeBase, ts.curve->chart(), ts.curve->domain(), tube);
        scene_.patches[kTubePatch] = tube;
        scene_.patches[kTubeBase] = base;
        scene_.patch_order.push_back(kTubePatch);
        scene_.patch_order.push_back(kTubeBase);
        scene_.fields[kTubeField] = ts.field;
        scene_.field_decls[kTubeField] = FieldDecl{kTubeField, "constant", "", {}, {}, {}};
      } catch (const GeometryError& err) {
        fail(b.line, err.what());
      }
      scene_.tube = t;
    }
  }
  for (const Block& b : blocks_) {
    if (b.kind == "field") {
      if (scene_.fields.count(b.name) != 0) fail(b.line, "field '" + b.name + "' declared twice");
      load_field(b);
    }
  }

  if (scene_block != nullptr) {
    const Block& b = *scene_block;
    allow_keys(b, {"patch", "sub", "field", "normal_fields", "product", "product_fields", "verify", "expect"});
    if (const Entry* e = get(b, "product")) {
      scene_.product = names(*e);
      if (scene_.product.size() != 2) fail(e->line, "product needs two patches");
      std::vector<PatchPtr> f;
      for (const auto& n : scene_.product) {
        auto it = scene_.patches.find(n);
        if (it == scene_.patches.end()) fail(e->line, "unknown patch '" + n + "'");
        f.push_back(it->second);
      }
      PatchPtr prod;
      try {
        prod = product_patch(*f[0], *f[1]);
      } catch (const Error& err) {
        fail(e->line, err.what());
      }
      scene_.patches[prod->name()] = prod;
      scene_.patch_order.push_back(prod->name());
      if (get(b, "patch") == nullptr) scene_.patch = prod->name();
    }
    if (const Entry* e = get(b, "product_fields")) {
      scene_.product_fields = names(*e);
      if (scene_.product_fields.size() != 2) fail(e->line, "product_fields needs two fields");
      if (scene_.product.empty()) fail(e->line, "product_fields needs 'product'");
      std::vector<int> dims;
      for (const auto& n : scene_.product) dims.push_back(scene_.patches.at(n)->ambient().embedding_dim());
      for (const auto& n : scene_.product_fields) {
        if (scene_.fields.count(n) == 0) fail(e->line, "unknown field '" + n + "'");
      }
      const std::string pname = scene_.product[0] + "x" + scene_.product[1];
      if (scene_.fields.count(pname) == 0) {
        scene_.fields[pname] = FieldAlongM::product(scene_.fields.at(scene_.product_fields[0]), dims[0],
                                                    scene_.fields.at(scene_.product_fields[1]), dims[1]);
        scene_.field_decls[pname] = FieldDecl{pname, "product", pname, {}, {}, scene_.product_fields};
      }
      if (get(b, "field") == nullptr) scene_.field = pname;
    }
    auto ref_patch = [&](const char* key, std::string& out) {
      if (const Entry* e = get(b, key)) {
        if (scene_.patches.count(e->value) == 0) fail(e->line, "unknown patch '" + e->value + "'");
        out = e->value;
      }
    };
    ref_patch("patch", scene_.patch);
    ref_patch("sub", scene_.sub);
    if (const Entry* e = get(b, "field")) {
      if (scene_.fields.count(e->value) == 0) fail(e->line, "unknown field '" + e->value + "'");
      scene_.field = e->value;
    }
    if (const Entry* e = get(b, "normal_fields")) {
      scene_.normal_fields = names(*e);
      for (const auto& n : scene_.normal_fields) {
        if (scene_.fields.count(n) == 0) fail(e->line, "unknown field '" + n + "'");
      }
    }
    if (const Entry* e = get(b, "verify")) scene_.verify = names(*e);
    if (const Entry* e = get(b, "expect")) {
      for (const auto& item : split(e->value, ',')) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) fail(e->line, "expect entries are 'theorem: verdict'");
        const std::string id = trim(item.substr(0, colon));
        try {
          scene_.expect[id] = parse_verdict(trim(item.substr(colon + 1)));
        } catch (const Error& err) {
          fail(e->line, err.what());
        }
      }
    }
    if (!scene_.sub.empty()) {
      PatchPtr s = scene_.patches.at(scene_.sub);
      if (s->parent() == nullptr) fail(b.line, "sub patch '" + scene_.sub + "' has no parent");
      if (scene_.patch.empty()) scene_.patch = s->parent()->name();
    }
  }
  if (scene_.patch.empty() && !scene_.patch_order.empty()) {
    for (const auto& n : scene_.patch_order) {
      if (scene_.patches.at(n)->parent() == nullptr) {
        scene_.patch = n;
        break;
      }
    }
  }
  if (scene_.field.empty() && scene_.fields.size() == 1) scene_.field = scene_.fields.begin()->first;

  for (const Block& b : blocks_) {
    if (b.kind != "loop") continue;
    allow_keys(b, {"patch", "points"});
    LoopDecl l;
    l.name = b.name;
    l.patch = get(b, "patch") != nullptr ? get(b, "patch")->value : scene_.patch;
    auto it = scene_.patches.find(l.patch);
    if (it == scene_.patches.end()) fail(b.line, "unknown patch '" + l.patch + "'");
    const Entry& pts = need(b, "points");
    for (const auto& p : split(pts.value, ';')) {
      Vec v = vector_text(p, pts.line);
      if (v.size() != it->second->dim()) fail(pts.line, "loop point has the wrong number of parameters");
      l.points.push_back(std::move(v));
    }
    if (l.points.size() < 2) fail(pts.line, "a loop needs at least two points");
    scene_.loops.push_back(std::move(l));
  }
  return std::move(scene_);
}

}  // namespace

PatchPtr Scene::find_patch(const std::string& n) const {
  auto it = patches.find(n);
  if (it == patches.end()) throw SceneError(name + ": unknown patch '" + n + "'");
  return it->second;
}

const FieldAlongM& Scene::find_field(const std::string& n) const {
  auto it = fields.find(n);
  if (it == fields.end()) throw SceneError(name + ": unknown field '" + n + "'");
  return it->second;
}

PatchPtr Scene::main_patch() const {
  if (patch.empty()) throw SceneError(name + ": scene declares no patch");
  return find_patch(patch);
}

PatchPtr Scene::sub_patch() const {
  if (sub.empty()) throw SceneError(name + ": scene declares no sub patch");
  return find_patch(sub);
}

const FieldAlongM& Scene::main_field() const {
  if (field.empty()) throw SceneError(name + ": scene declares no field");
  return find_field(field);
}

std::vector<int> Scene::cells(int dims) const {
  std::vector<int> out(static_cast<std::size_t>(dims), resolution.front());
  if (resolution.size() > 1) {
    for (int i = 0; i < dims && i < static_cast<int>(resolution.size()); ++i) {
      out[static_cast<std::size_t>(i)] = resolution[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

Grid Scene::grid_for(const SubmanifoldPatch& p) const { return Grid(p.domain(), cells(p.dim())); }

Scene parse_scene(const std::string& text, const std::string& name) { return Loader(text, name).run(); }

Scene load_scene_file(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (!fs::exists(p) && fs::exists(fs::path(path + ".scene"))) p = fs::path(path + ".scene");
  std::ifstream in(p, std::ios::binary);
  if (!in) throw SceneError(path + ": cannot open scene file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), p.filename().string());
}

std::string scene_digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed;
  nlohmann::json arr = nlohmann::json::array();
  auto failure_json = [](const ValidationFailure& f) {
    return nlohmann::json{{"check", f.check}, {"patch", f.patch}, {"u", vec_to_json(f.u)}, {"value", f.value},
                          {"message", f.message}};
  };
  for (const auto& p : patches) {
    nlohmann::json pj;
    pj["patch"] = p.patch;
    pj["samples"] = p.samples;
    pj["max_constraint_residual"] = p.max_constraint_residual;
    pj["min_relative_singular_value"] = p.min_relative_singular_value;
    pj["max_field_tangency"] = p.max_field_tangency;
    pj["passed"] = p.passed;
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& f : p.failures) fs.push_back(failure_json(f));
    pj["failures"] = fs;
    arr.push_back(pj);
  }
  j["patches"] = arr;
  nlohmann::json ns = nlohmann::json::array();
  for (const auto& f : nesting_failures) ns.push_back(failure_json(f));
  j["nesting_failures"] = ns;
  return j;
}

ValidationReport validate_scene(const Scene& scene) {
  ValidationReport report;
  for (const auto& name : scene.patch_order) {
    const PatchPtr p = scene.patches.at(name);
    const Grid grid = scene.grid_for(*p);
    const FieldAlongM* field = nullptr;
    for (const auto& [fname, decl] : scene.field_decls) {
      if (decl.on == name) {
        field = &scene.fields.at(fname);
        break;
      }
    }
    if (field == nullptr && name == scene.patch && !scene.field.empty()) field = &scene.fields.at(scene.field);
    PatchValidation v = validate_patch(*p, field, grid, scene.tol);
    report.passed = report.passed && v.passed;
    report.patches.push_back(std::move(v));

    if (const SubmanifoldPatch* parent = p->parent()) {
      for (std::size_t k = 0; k < grid.total_vertices(); ++k) {
        const Vec u = grid.vertex(k);
        Vec pu;
        try {
          pu = p->chart().eval(u);
        } catch (const DomainError&) {
          continue;  // reported by validate_patch as an evaluation failure
        }
        if (!inside(parent->domain(), wrap_into(parent->domain(), pu), 1e-9)) {
          report.nesting_failures.push_back({"nesting", name, u, 0.0,
                                             "sub-chart leaves the domain of parent '" + parent->name() + "'"});
          report.passed = false;
          break;
        }
      }
    }
  }
  return report;
}

std::string format_domain(const std::vector<std::string>& params, const DomainBox& box) {
  std::string out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) out += "; ";
    out += params[i] + ": " + format_double(box[i].lo) + " .. " + format_double(box[i].hi);
    if (box[i].periodic) out += " periodic";
  }
  return out;
}

std::string tube_scene_text(const Scene& scene, const TubeScene& tube) {
  std::ostringstream out;
  const SubmanifoldPatch& t = *tube.tube;
  const SubmanifoldPatch& c = *tube.curve;
  out << "# tube of half-width " << format_double(tube.epsilon) << " over " << c.name() << "\n";
  out << "# minimum transversality " << format_double(tube.min_transversality) << "\n\n";
  std::map<std::string, double> named;
  for (const ChartExpr* e : {&t.chart(), &c.chart()}) {
    for (const ExprNode& node : e->nodes()) {
      if (node.op == OpCode::kConstant && !node.name.empty() && node.name != "pi") named[node.name] = node.value;
    }
  }
  if (!named.empty()) {
    out << "[constants]\n";
    for (const auto& [k, v] : named) out << k << " = " << format_double(v) << "\n";
    out << "\n";
  }
  out << "[ambient R]\ncoords = ";
  const auto& coords = t.ambient().coords();
  for (std::size_t i = 0; i < coords.size(); ++i) out << (i ? ", " : "") << coords[i];
  out << "\n\n";
  out << "[submanifold " << kTubePatch << "]\nambient = R\nparams = ";
  for (std::size_t i = 0; i < t.chart().params().size(); ++i) out << (i ? ", " : "") << t.chart().params()[i];
  out << "\nchart = " << t.chart().print() << "\ndomain = " << format_domain(t.chart().params(), t.domain()) << "\n\n";
  out << "[submanifold " << kTubeBase << "]\nparent = " << kTubePatch << "\nparams = ";
  for (std::size_t i = 0; i < c.chart().params().size(); ++i) out << (i ? ", " : "") << c.chart().params()[i];
  out << "\nchart = " << c.chart().print() << "\ndomain = " << format_domain(c.chart().params(), c.domain()) << "\n\n";
  out << "[field " << kTubeField << "]\nkind = constant\nvalue = ";
  for (Eigen::Index i = 0; i < tube.direction.size(); ++i) out << (i ? ", " : "") << format_double(tube.direction[i]);
  out << "\n\n[grid]\nresolution = ";
  for (std::size_t i = 0; i < scene.resolution.size(); ++i) out << (i ? ", " : "") << scene.resolution[i];
  out << "\n\n[scene]\npatch = " << kTubePatch << "\nsub = " << kTubeBase << "\nfield = " << kTubeField
      << "\nverify = minimality\nexpect = minimality: confirmed\n";
  return out.str();
}

}  // namespace penumbra
