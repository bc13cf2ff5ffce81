#include "holo/cli/app.hpp"

int main(int argc, char** argv) { return holo::cli::run(argc, argv); }
