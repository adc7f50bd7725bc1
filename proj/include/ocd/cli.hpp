#pragma once

namespace ocd {

// Command-line entry point: subcommands detect, simulate-coverage,
// simulate-support, calibrate, preset.  Returns the process exit code.
int cli_main(int argc, const char* const* argv);

}  // namespace ocd
