#include "jscc/cli.hpp"

int main(int argc, char** argv) { return jscc::run_cli(argc, argv); }
