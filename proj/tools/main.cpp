#include <string>
#include <vector>

#include "specquant/cli.hpp"

int main(int argc, char** argv) {
  return specquant::cli::run(std::vector<std::string>(argv, argv + argc));
}
