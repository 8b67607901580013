#include "lrr/cli.hpp"

int main(int argc, char** argv) { return lrr::cli::run(argc, argv); }
