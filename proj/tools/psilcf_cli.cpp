#include "psilcf/cli.hpp"

int main(int argc, char** argv) { return psilcf::cli::run(argc, argv); }
