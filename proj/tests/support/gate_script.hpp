#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenario.hpp"
#include "swtrain/mock_provider.hpp"

namespace gate_script {

// Strict mock that answers successive gate prompts with `answers`; an answer
// of "!503" fails with that status instead.
struct Gate {
  std::shared_ptr<swtrain::llm::MockProvider> mock;
  std::unique_ptr<swtrain::llm::Gateway> gateway;

  std::size_t calls() const { return mock->calls_with_system("MI STAGE GATE"); }
};

inline Gate make(const std::vector<std::string>& answers) {
  auto rules = nlohmann::json::array();
  for (const auto& a : answers) {
    nlohmann::json r = {{"system_contains", "MI STAGE GATE"}, {"times", 1}, {"response", a}};
    if (a.rfind("!", 0) == 0) r["error_status"] = std::stoi(a.substr(1));
    rules.push_back(r);
  }
  Gate g;
  g.mock = swtrain::llm::MockProvider::from_json({{"strict", true}, {"rules", rules}});
  g.gateway = std::make_unique<swtrain::llm::Gateway>(scenario::provider_config(), g.mock, g.mock);
  return g;
}

}  // namespace gate_script
