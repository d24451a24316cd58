#pragma once

namespace depemp {

/// Entry point of the command-line front end. Returns 0 when every asserted
/// check passes, 1 on a check failure, and 2 on a configuration error.
int cli_main(int argc, char** argv);

}  // namespace depemp
