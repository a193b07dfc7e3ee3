#include <iostream>
#include <string>
#include <vector>

#include "mhess/cli.hpp"

int main(int argc, char** argv) {
  return mhess::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
