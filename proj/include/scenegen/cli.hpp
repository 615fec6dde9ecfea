#pragma once

namespace scenegen {

// Entry point of the scenegen tool. Returns 0 on success, 1 on a usage
// error and 2 on a runtime failure.
int run_cli(int argc, char** argv);

}  // namespace scenegen
