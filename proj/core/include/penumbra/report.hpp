#pragma once

#include "penumbra/linalg.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace penumbra {

enum class Verdict { kConfirmed, kHypothesesNotMet, kCounterexampleFlag };

std::string to_string(Verdict v);
/// Throws Error for unknown spellings.
Verdict parse_verdict(const std::string& text);
/// 0 confirmed, 2 hypotheses-not-met, 1 counterexample-flag.
int exit_code(Verdict v);

/// One named residual compared against a threshold.
struct Check {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  std::string relation;  // "<", ">" or "agree"
  bool pass = false;
};

struct TheoremReport {
  std::string theorem;
  std::string subject;
  std::vector<Check> hypotheses;
  std::vector<Check> conclusions;
  std::map<std::string, double> measurements;
  std::vector<std::string> notes;
  std::optional<Vec> witness;
  Verdict verdict = Verdict::kHypothesesNotMet;

  const Check& add_hypothesis(const std::string& name, double value, double tol, const std::string& relation);
  const Check& add_conclusion(const std::string& name, double value, double tol, const std::string& relation);
  /// Conclusion whose pass flag is decided by the caller (relation "agree").
  const Check& add_agreement(const std::string& name, double value, double tol, bool pass);

  bool hypotheses_hold() const;
  bool conclusions_hold() const;
  /// Sets the verdict from the recorded checks.
  Verdict decide();

  nlohmann::json to_json() const;
};

nlohmann::json vec_to_json(const Vec& v);

}  // namespace penumbra
