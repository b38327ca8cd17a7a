#include <string>
#include <vector>

#include "bocl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bocl::cli::run_main(args);
}
