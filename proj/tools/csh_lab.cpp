#include "csh/cli.hpp"

int main(int argc, char** argv) { return csh::cli::run(argc, argv); }
