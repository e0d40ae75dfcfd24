#pragma once

#include <string>
#include <vector>

namespace camref::cli {

// Dispatches one subcommand of {simplify, edges, perimeter, refine, eval,
// gridsearch, overlay, synth}. args excludes the program name. Returns the
// process exit code; all diagnostics go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace camref::cli
