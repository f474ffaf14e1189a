#include "sentinel/cli.hpp"

int main(int argc, char** argv) {
    return sentinel::cli_main(argc, argv);
}
