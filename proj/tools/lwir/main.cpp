#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cli.hpp"

extern char** environ;

int main(int argc, char** argv) {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  const std::vector<std::string> args(argv + 1, argv + argc);
  return lwir::cli::run(args, std::cout, std::cerr, env);
}
