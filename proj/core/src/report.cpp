#include "penumbra/report.hpp"

#include "penumbra/error.hpp"

#include <algorithm>
#include <cmath>

namespace penumbra {

namespace {

bool compare(double value, double tol, const std::string& relation) {
  if (std::isnan(value)) return false;
  if (relation == "<") return value < tol;
  if (relation == ">") return value > tol;
  throw Error("unknown check relation '" + relation + "'");
}

nlohmann::json check_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"relation", c.relation}, {"pass", c.pass}};
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kConfirmed:
      return "confirmed";
    case Verdict::kHypothesesNotMet:
      return "hypotheses-not-met";
    case Verdict::kCounterexampleFlag:
      return "counterexample-flag";
  }
  return "unknown";
}

Verdict parse_verdict(const std::string& text) {
  if (text == "confirmed") return Verdict::kConfirmed;
  if (text == "hypotheses-not-met") return Verdict::kHypothesesNotMet;
  if (text == "counterexample-flag") return Verdict::kCounterexampleFlag;
  throw Error("unknown verdict '" + text + "'");
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::kConfirmed:
      return 0;
    case Verdict::kHypothesesNotMet:
      return 2;
    case Verdict::kCounterexampleFlag:
      return 1;
  }
  return 1;
}

const Check& TheoremReport::add_hypothesis(const std::string& name, double value, double tol,
                                           const std::string& relation) {
  hypotheses.push_back({name, value, tol, relation, compare(value, tol, relation)});
  return hypotheses.back();
}

const Check& TheoremReport::add_conclusion(const std::string& name, double value, double tol,
                                           const std::string& relation) {
  conclusions.push_back({name, value, tol, relation, compare(value, tol, relation)});
  return conclusions.back();
}

const Check& TheoremReport::add_agreement(const std::string& name, double value, double tol, bool pass) {
  conclusions.push_back({name, value, tol, "agree", pass});
  return conclusions.back();
}

bool TheoremReport::hypotheses_hold() const {
  return std::all_of(hypotheses.begin(), hypotheses.end(), [](const Check& c) { return c.pass; });
}

bool TheoremReport::conclusions_hold() const {
  return std::all_of(conclusions.begin(), conclusions.end(), [](const Check& c) { return c.pass; });
}

Verdict TheoremReport::decide() {
  if (!hypotheses_hold()) {
    verdict = Verdict::kHypothesesNotMet;
  } else if (conclusions_hold()) {
    verdict = Verdict::kConfirmed;
  } else {
    verdict = Verdict::kCounterexampleFlag;
    notes.push_back("conclusion failed at finite resolution; refine the grid or tolerances before reading this as a "
                    "counterexample");
  }
  return verdict;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

nlohmann::json TheoremReport::to_json() const {
  nlohmann::json out;
  out["theorem"] = theorem;
  out["subject"] = subject;
  out["verdict"] = to_string(verdict);
  out["hypotheses"] = nlohmann::json::array();
  for (const Check& c : hypotheses) out["hypotheses"].push_back(check_json(c));
  out["conclusions"] = nlohmann::json::array();
  for (const Check& c : conclusions) out["conclusions"].push_back(check_json(c));
  out["measurements"] = nlohmann::json::object();
  for (const auto& [k, v] : measurements) out["measurements"][k] = v;
  out["notes"] = notes;
  if (witness) out["witness"] = vec_to_json(*witness);
  return out;
}

}  // namespace penumbra
