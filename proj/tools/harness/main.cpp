#include <iostream>

#include "../common/logging.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  hlip::tools::init_logging();
  return hlip::harness::run_cli(argc, argv, std::cout, std::cerr);
}
