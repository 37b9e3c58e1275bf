#include "odtk/cli.hpp"

int main(int argc, char** argv) { return odtk::cli::run(argc, argv); }
