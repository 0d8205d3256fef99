#include "rjmlt/cli.hpp"

int main(int argc, char **argv)
{
    return rjmlt::dispatch(argc, argv);
}
