#include "commands.hpp"

int main(int argc, char** argv) { return sgt::cli::run(argc, argv); }
