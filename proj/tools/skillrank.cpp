#include "skillrank/cli.hpp"

int main(int argc, char** argv) { return skillrank::cli::run(argc, argv); }
