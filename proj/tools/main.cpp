#include "spikeflow/cli.hpp"

int main(int argc, char** argv) { return spikeflow::dispatch(argc, argv); }
