#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "impactkam/config.hpp"

namespace impactkam {

inline constexpr const char* kVersion = "0.1.0";

struct CommandContext {
    RunConfig config;
    std::string out_dir = "out";
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
};

int cmd_simulate(const CommandContext& ctx);
int cmd_impact_map(const CommandContext& ctx);
int cmd_find_curve(const CommandContext& ctx);
int cmd_sweep_ladder(const CommandContext& ctx);
int cmd_certify(const CommandContext& ctx);
int cmd_audit(const CommandContext& ctx);

/// Dispatch + uniform error handling: configuration problems exit 2 with a
/// line-numbered message and no output, numerical failures exit 3 after
/// writing a machine-readable failure record into the output directory.
int run_command(const std::string& name, CommandContext ctx);

}  // namespace impactkam
