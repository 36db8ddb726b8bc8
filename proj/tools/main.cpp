#include "resilinet/cli.hpp"

int main(int argc, char** argv) { return resilinet::cli_main(argc, argv); }
