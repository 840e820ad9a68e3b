#include <iostream>

#include "dlbac/cli.h"

int main(int argc, char** argv) {
  return dlbac::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout,
                         std::cerr);
}
