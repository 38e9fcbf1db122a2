#include <iostream>

#include "alloc_tuning.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  wmr::cli::tune_allocator();
  return wmr::cli::run(argc, argv, std::cout, std::cerr);
}
