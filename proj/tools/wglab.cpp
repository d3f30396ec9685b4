#include "cli.hpp"

int main(int argc, char** argv) { return wglab::cli::run(argc, argv); }
