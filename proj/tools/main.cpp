#include "changecast/cli.hpp"

int main(int argc, char** argv) { return changecast::run_cli(argc, argv); }
