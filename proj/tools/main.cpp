#include <string>
#include <vector>

#include "pairrank/cli.hpp"

int main(int argc, char** argv) {
  return pairrank::run_cli(std::vector<std::string>(argv, argv + argc));
}
