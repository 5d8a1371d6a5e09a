#include "helmscat/cli.hpp"

int main(int argc, char** argv) { return helmscat::cli::run(argc, argv); }
