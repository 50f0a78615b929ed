#include <string>
#include <vector>

#include "cbml/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cbml::run_cli(args);
}
