#pragma once

#include "json.hpp"

#include <optional>
#include <string>

namespace tperiodic::cli {

struct CommandOptions {
    std::string out_dir = ".";
    std::optional<int> seed_grid;
    bool quiet = false;
};

/// Runs one subcommand (integrate, degree, sigma, verify-index, branch) and
/// returns a short summary; throws tperiodic::Error on failure.
nlohmann::json run_command(const std::string& command, const nlohmann::json& config, const CommandOptions& options);

/// 0 success, 2 configuration or validation error, 3 numerical failure.
[[nodiscard]] int exit_code_for(const std::exception& error) noexcept;

/// {"error": {"kind", "message", "offset"}}
[[nodiscard]] nlohmann::json error_json(const std::exception& error);

}  // namespace tperiodic::cli
