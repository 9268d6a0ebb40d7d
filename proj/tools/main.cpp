#include "bred/cli.hpp"

int main(int argc, char** argv) { return bred::cli_main(argc, argv); }
