#pragma once

#include "exitbsde/config.hpp"

#include <iosfwd>
#include <string>

namespace exitbsde {

/// Exit-code contract: 0 success, 2 config error, 3 numeric error,
/// 4 acceptance failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitAcceptance = 4;

int cmd_simulate(const json& config, const std::string& outdir, int threads);
int cmd_loss_eval(const json& config, const std::string& outdir, int threads);
int cmd_rate_study(const json& config, const std::string& outdir, int threads);
int cmd_exit_study(const json& config, const std::string& outdir, int threads);
int cmd_decompose_check(const json& config, const std::string& outdir, int threads);
int cmd_wald(const json& config, const std::string& outdir, int threads);
int cmd_train(const json& config, const std::string& outdir, int threads);
int cmd_validate(const json& config, const std::string& outdir, int threads);
int cmd_verify_all(const json& config, const std::string& outdir, int threads,
                   std::ostream& out);

/// Dispatch by command name; maps exceptions onto the exit-code contract and
/// prints diagnostics to `err`.
int run_command(const std::string& command, const std::string& config_path,
                const std::string& outdir, int threads, std::ostream& out, std::ostream& err);

}  // namespace exitbsde
