#include <string>
#include <vector>

#include "phantom/cli.hpp"

int main(int argc, char** argv) {
  return phantom::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
