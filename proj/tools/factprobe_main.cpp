#include "factprobe/cli.hpp"

int main(int argc, char** argv) { return factprobe::cli::dispatch(argc, argv); }
