#include "commands.hpp"

int main(int argc, char** argv) { return popgcn::cli::run(argc, argv); }
