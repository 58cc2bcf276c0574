#pragma once

#include <string>

namespace spikeflow {

// Entry point behind tools/main.cpp. Exit codes: 0 success, 1 bad usage or
// config, 2 memory budget refused, 3 numerical failure (partial outputs are
// still written where they exist).
int dispatch(int argc, char** argv);

}  // namespace spikeflow
