#include "promptrec/cli.hpp"

int main(int argc, char** argv) { return promptrec::run_cli(argc, argv); }
