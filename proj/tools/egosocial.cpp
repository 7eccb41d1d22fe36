#include "egosocial/cli.hpp"

int main(int argc, char** argv) { return egosocial::cli::run(argc, argv); }
