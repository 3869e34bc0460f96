#include "fbmilt/cli.hpp"

int main(int argc, char** argv) { return fbmilt::cli::main_entry(argc, argv); }
