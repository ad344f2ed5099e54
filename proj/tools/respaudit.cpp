#include "respaudit/cli.hpp"

int main(int argc, char** argv) { return respaudit::run_cli(argc, argv); }
