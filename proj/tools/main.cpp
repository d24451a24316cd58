#include "cli.hpp"

int main(int argc, char** argv) { return depemp::cli_main(argc, argv); }
