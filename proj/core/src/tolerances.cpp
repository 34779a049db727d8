#include "penumbra/tolerances.hpp"

#include "penumbra/error.hpp"

#include <cmath>

namespace penumbra {

namespace {

double* slot(Tolerances& t, const std::string& name) {
  if (name == "rank_tol") return &t.rank_tol;
  if (name == "on_ambient_tol") return &t.on_ambient_tol;
  if (name == "tgs_tol") return &t.tgs_tol;
  if (name == "holonomy_tol") return &t.holonomy_tol;
  if (name == "transport_tol") return &t.transport_tol;
  if (name == "extract_tol") return &t.extract_tol;
  if (name == "helix_tol") return &t.helix_tol;
  if (name == "transversality_floor") return &t.transversality_floor;
  if (name == "ntgs_floor") return &t.ntgs_floor;
  if (name == "fd_step") return &t.fd_step;
  if (name == "degenerate_fraction") return &t.degenerate_fraction;
  return nullptr;
}

}  // namespace

void Tolerances::set(const std::string& name, double value) {
  if (!std::isfinite(value) || value < 0.0) throw Error("tolerance " + name + " must be a finite non-negative number");
  if (name == "transport_steps") {
    if (value < 16) throw Error("transport_steps must be at least 16");
    transport_steps = static_cast<int>(value);
    return;
  }
  double* p = slot(*this, name);
  if (p == nullptr) throw Error("unknown tolerance " + name);
  *p = value;
}

double Tolerances::get(const std::string& name) const {
  if (name == "transport_steps") return transport_steps;
  double* p = slot(const_cast<Tolerances&>(*this), name);
  if (p == nullptr) throw Error("unknown tolerance " + name);
  return *p;
}

const std::vector<std::string>& Tolerances::names() {
  static const std::vector<std::string> all = {
      "degenerate_fraction", "extract_tol", "fd_step", "helix_tol", "holonomy_tol", "ntgs_floor",
      "on_ambient_tol", "rank_tol", "tgs_tol", "transport_steps", "transport_tol", "transversality_floor"};
  return all;
}

}  // namespace penumbra
