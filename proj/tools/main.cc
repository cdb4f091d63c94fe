#include "cli.h"

int main(int argc, char** argv) { return partmatch::cli::run(argc, argv); }
