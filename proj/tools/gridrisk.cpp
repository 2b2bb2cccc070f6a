#include <iostream>
#include <string>
#include <vector>

#include "gridrisk/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gridrisk::cli::run(args, std::cout, std::cerr);
}
