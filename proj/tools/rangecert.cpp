#include "rangecert/cli.hpp"

int main(int argc, char** argv) { return rangecert::run_cli(argc, argv); }
