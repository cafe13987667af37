#include <string>
#include <vector>

#include "commands.h"

int main(int argc, char** argv) {
  return kvbeam::cli::run_cli(std::vector<std::string>(argv, argv + argc));
}
