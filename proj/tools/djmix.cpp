#include "djmix/cli.hpp"

int main(int argc, char** argv) { return djmix::run_cli(argc, argv); }
