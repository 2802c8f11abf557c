#include <iostream>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  return semcom::cli::run(argc, argv, std::cerr);
}
