#include <string>
#include <vector>

#include "scarcity/harness.hpp"

int main(int argc, char** argv)
{
    return scarcity::harness::run_cli(std::vector<std::string>(argv, argv + argc));
}
