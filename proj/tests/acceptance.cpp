// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion ids...]
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "nsf/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const auto work = std::filesystem::current_path() / "acceptance_work";
  const auto res = nsf::acceptance::run_all(work, only, stdout);
  int failed = 0;
  for (const auto& r : res) failed += !r.pass;
  std::printf("%zu criteria, %d failed\n", res.size(), failed);
  return failed == 0 ? 0 : 1;
}
