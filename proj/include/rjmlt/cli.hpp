#pragma once

namespace rjmlt {

// Runs one CLI invocation (render/validate1d/compare/stats) and returns
// the process exit code. Never throws; failures print a one line
// diagnostic to stderr and return nonzero.
int dispatch(int argc, const char *const *argv);

}
