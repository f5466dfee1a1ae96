#include <iostream>

#include "fcnd/cli.hpp"

int main(int argc, char** argv) {
  return fcnd::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
