#ifndef DSGD_CLI_HPP
#define DSGD_CLI_HPP

#include <string>

#include "dsgd/config.hpp"

namespace dsgd {

// Subcommand bodies. Each returns a process exit code: 0 iff the run (and
// every enabled invariant check) succeeded. Fatal errors are reported by
// exception and mapped to a nonzero exit in the tool wrapper.

// Writes <out>/metrics.csv and <out>/diagnostics.txt.
int cmd_train(const RunConfig& cfg);

// Writes <out>/metrics_<method>.csv for the four methods plus
// <out>/summary.csv.
int cmd_compare(const RunConfig& cfg);

// which: "topology", "grad" or "bound". Prints a pass/fail table.
int cmd_check(const RunConfig& cfg, const std::string& which);

}  // namespace dsgd

#endif  // DSGD_CLI_HPP
