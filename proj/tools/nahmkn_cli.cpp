#include "nahmkn/cli.hpp"

int main(int argc, char** argv) { return nahmkn::cli::main_entry(argc, argv); }
