#include "slicedssm/cli.hpp"

int main(int argc, char** argv) { return slicedssm::run_cli(argc, argv); }
