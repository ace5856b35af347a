#include "ez/cli.hpp"

int main(int argc, char** argv) { return ez::cli::run(argc, argv); }
