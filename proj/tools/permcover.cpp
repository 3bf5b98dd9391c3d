#include "permcover/cli.hpp"

int main(int argc, char **argv) { return permcover::cli::dispatch(argc, argv); }
