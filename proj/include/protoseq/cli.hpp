// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace protoseq {

/// Entry point of the `protoseq` command line tool. Subcommands: train, eval,
/// explain, simplify, prune, prototypes, serve, synth.
///
/// Exit codes: 0 success, 1 runtime failure (one JSON line
/// {"error": ..., "command": ...} on `err`), 2 usage error (usage text on
/// `err`).
int run_command(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace protoseq
