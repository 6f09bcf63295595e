#include "lemcpd/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return lemcpd::run_cli(argc, argv, std::cout, std::cerr);
}
