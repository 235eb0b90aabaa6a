#include "cli.hpp"

int main(int argc, char **argv) { return sortform::cli::run(argc, argv); }
