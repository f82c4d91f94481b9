#include <string>
#include <vector>

#include "neurotrack/pipeline/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return neurotrack::pipeline::cli_main(args);
}
