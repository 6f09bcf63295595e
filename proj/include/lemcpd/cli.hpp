#pragma once

// Command implementations behind the `lemcpd` executable.

#include "lemcpd/config.hpp"

#include <ostream>

namespace lemcpd {

/// Writes sequence.edges and labels.txt under cfg.out.
void cmd_generate(const RunConfig& cfg, std::ostream& out);
/// Writes report.csv and report.json under cfg.out; prints the top-K summary.
void cmd_detect(const RunConfig& cfg, std::ostream& out);
/// Writes prediction.edges under cfg.out; prints the MAE when cfg.truth is set.
void cmd_predict(const RunConfig& cfg, std::ostream& out);
/// Writes metrics.csv (and sweep.csv for a non-empty grid) under cfg.out.
void cmd_bench(const RunConfig& cfg, std::ostream& out);

/// Parses arguments, dispatches and maps failures to exit codes: 0 success,
/// 2 config error, 3 data error, 4 numerical failure. Failures print one
/// `error: <message>` line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lemcpd
