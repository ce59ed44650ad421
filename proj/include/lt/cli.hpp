#pragma once

namespace lt {

/// Exit codes: 0 success, 1 input or configuration error, 2 some sample
/// finished without a trace.
int run_cli(int argc, char** argv);

}  // namespace lt
