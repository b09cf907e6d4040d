#include <iostream>

#include "nearrat/harness/commands.hpp"

int main(int argc, char** argv) {
  return nearrat::harness::cli_main(argc, argv, nearrat::harness::process_env(), std::cout, std::cerr);
}
