#include "commands.hpp"

int main(int argc, char** argv) { return kafr::cli::run(argc, argv); }
