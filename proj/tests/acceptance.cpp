// Acceptance runner: prints one PASS/FAIL line per criterion. With criterion
// ids as arguments only those run; --out <dir> keeps the preset CSV files.
#include <algorithm>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "memasym/verification.hpp"

int main(int argc, char** argv) {
  using namespace memasym::verify;
  AcceptanceOptions opt;
  std::vector<std::string> regime_lines;
  opt.regime_lines = &regime_lines;
  std::vector<std::string> only;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--out") == 0 && a + 1 < argc)
      opt.output_dir = argv[++a];
    else
      only.emplace_back(argv[a]);
  }

  int failed = 0, ran = 0;
  for (const auto& check : acceptance_checks(opt)) {
    if (!only.empty() && std::find(only.begin(), only.end(), check.id) == only.end())
      continue;
    ++ran;
    CheckResult r;
    try {
      r = check.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (r.passed ? "PASS" : "FAIL") << "  criterion " << check.id << " ("
              << check.title << "): " << r.detail << std::endl;
    for (const auto& line : regime_lines) std::cout << "        " << line << std::endl;
    regime_lines.clear();
    if (!r.passed) ++failed;
  }
  if (ran == 0) {
    std::cerr << "no matching criteria\n";
    return 2;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
