#include "krongp/cli.hpp"

int main(int argc, char** argv) { return krongp::run_cli(argc, argv); }
