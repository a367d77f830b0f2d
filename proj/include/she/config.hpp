#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "she/experiments.hpp"

namespace she {

// One structured document driving every CLI command; unknown keys are rejected
// and the canonical digest of the effective document is stamped into outputs.
struct RunConfig {
    ExperimentPlan plan;
    double kernel_tol = 1e-12;      // truncation tolerance for kernel queries
    std::string log_level = "info"; // info | quiet

    nlohmann::json to_json() const;
    std::string digest() const;
};

RunConfig config_from_json(const nlohmann::json& j);

// Reads the file, then applies `key=value` overrides (dotted paths allowed);
// values parse as JSON scalars, falling back to strings.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// Exposed for tests: in-place override application on a raw document.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace she
