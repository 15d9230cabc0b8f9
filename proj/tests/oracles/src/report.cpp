#include "slstm/oracles/oracles.hpp"

namespace slstm::oracles {

bool SuiteResult::passed() const {
  for (const auto& c : checks)
    if (c.gating && !c.passed) return false;
  return true;
}

bool SuiteResult::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json j;
  j["suite"] = name;
  j["passed"] = passed();
  j["seconds"] = seconds;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"gating", c.gating}, {"detail", c.detail}});
  return j;
}

}  // namespace slstm::oracles
