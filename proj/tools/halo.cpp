#include "halo/cli/app.hpp"

int main(int argc, char** argv) { return halo::cli::run(argc, argv); }
