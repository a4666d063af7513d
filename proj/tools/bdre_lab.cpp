#include "bdre/cli.hpp"

int main(int argc, char** argv) { return bdre::run_cli(argc, argv); }
