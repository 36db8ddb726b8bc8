#pragma once

namespace resilinet {

/// Entry point of the `resilinet` tool. Returns 0 on success, 2 for usage or
/// configuration errors, 1 for runtime failures.
int cli_main(int argc, char** argv);

}  // namespace resilinet
