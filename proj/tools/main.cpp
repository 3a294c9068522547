#include <iostream>

#include "rffr/cli/app.hpp"

int main(int argc, char** argv) {
  return rffr::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
