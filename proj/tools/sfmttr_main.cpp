#include "sfmttr/cli.hpp"

int main(int argc, char** argv) { return sfmttr::cli::run(argc, argv); }
