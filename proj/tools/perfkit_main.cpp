#include "perfkit/cli.hpp"

int main(int argc, char** argv)
{
    return perfkit::cli::run(argc, argv);
}
