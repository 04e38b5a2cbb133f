#include "aimlake/runner.hpp"

int main(int argc, char** argv) { return aimlake::run_cli(argc, argv); }
