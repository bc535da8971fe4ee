#include "revolver/cli.hpp"

int main(int argc, char** argv) {
  return revolver::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
