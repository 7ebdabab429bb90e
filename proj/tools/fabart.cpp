#include "fabart/data/cli.hpp"

int main(int argc, char** argv) { return fabart::data::cli_dispatch(argc, argv); }
