#include <iostream>
#include <string>
#include <vector>

#include "daiqa/pipeline/commands.hpp"

int main(int argc, char** argv) {
  return daiqa::pipeline::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
