#include "mpde/cli.hpp"

int main(int argc, char **argv) { return mpde::cli::run(argc, argv); }
