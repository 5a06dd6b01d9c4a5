#include <string>
#include <vector>

#include "fsre/cli.hpp"

int main(int argc, char** argv) {
  return fsre::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
