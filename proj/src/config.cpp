#include "she/config.hpp"

#include <fstream>
#include <stdexcept>

#include "she/digest.hpp"

namespace she {

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j = plan_to_json(plan);
    j["kernel_tol"] = kernel_tol;
    j["log_level"] = log_level;
    return j;
}

std::string RunConfig::digest() const {
    // execution placement keys do not alter the science; keep digests portable
    nlohmann::json j = to_json();
    j.erase("output_dir");
    j.erase("workers");
    j.erase("log_level");
    return canonical_json_digest(j);
}

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    nlohmann::json plan_part = j;
    RunConfig cfg;
    if (plan_part.contains("kernel_tol")) {
        plan_part.at("kernel_tol").get_to(cfg.kernel_tol);
        plan_part.erase("kernel_tol");
        if (!(cfg.kernel_tol > 0.0)) throw std::invalid_argument("config: kernel_tol must be > 0");
    }
    if (plan_part.contains("log_level")) {
        plan_part.at("log_level").get_to(cfg.log_level);
        plan_part.erase("log_level");
        if (cfg.log_level != "info" && cfg.log_level != "quiet")
            throw std::invalid_argument("config: log_level must be info or quiet");
    }
    cfg.plan = plan_from_json(plan_part);  // strict on the remaining keys
    return cfg;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like key=value: " + assignment);
    std::string key = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);

    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // bare words become strings

    // dotted path navigation; intermediate objects are created as needed
    nlohmann::json* cur = &doc;
    std::size_t pos = 0;
    for (;;) {
        auto dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos
                                                                    : dot - pos);
        if (part.empty()) throw std::invalid_argument("override has an empty path segment");
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            return;
        }
        cur = &(*cur)[part];
        pos = dot + 1;
    }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config file not found: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("config file is not valid JSON: " + path);
    for (const auto& o : overrides) apply_override(doc, o);
    return config_from_json(doc);
}

}  // namespace she
