#include "ffent/cli.hpp"

int main(int argc, char** argv) { return ffent::cli::run(argc, argv); }
