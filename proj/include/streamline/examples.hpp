#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace streamline {

// Built-in run configurations, selectable with --example NAME.
std::vector<std::string> example_names();
// Throws ConfigError for an unknown name.
nlohmann::json example_config(const std::string& name);

}  // namespace streamline
