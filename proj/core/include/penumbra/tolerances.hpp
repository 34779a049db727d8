#pragma once

#include <string>
#include <vector>

namespace penumbra {

/// Numeric thresholds shared by every module. All are overridable per scene
/// (`[tolerances]` block) or per run (`--tol name=value`).
struct Tolerances {
  double rank_tol = 1e-8;          // relative singular-value threshold
  double on_ambient_tol = 1e-8;    // |c(x)|, tangency of fields to N
  double tgs_tol = 1e-7;           // normalized |II(w,w)|
  double holonomy_tol = 1e-6;      // |P(W) - W| obstruction threshold
  double transport_tol = 1e-8;     // norm / tangency drift during transport
  double extract_tol = 1e-8;       // |F| on an emitted shadow point
  double helix_tol = 1e-7;         // max |h - mean h|
  double transversality_floor = 1e-3;
  double ntgs_floor = 1e-3;
  double fd_step = 1e-5;           // central differences of sampled fields
  double degenerate_fraction = 0.95;
  int transport_steps = 4096;

  /// Throws Error for unknown names.
  void set(const std::string& name, double value);
  double get(const std::string& name) const;
  static const std::vector<std::string>& names();
};

}  // namespace penumbra
