// Acceptance runner: one PASS/FAIL line per criterion; nonzero exit on any failure.
#include <cstring>
#include <iostream>

#include "hypolab/bench.hpp"

int main(int argc, char** argv) {
  hypolab::bench::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--no-sampler")) opt.run_sampler = false;
    else opt.only.insert(std::atoi(argv[i]));
  }
  int failed = 0;
  for (const auto& r : hypolab::bench::run_acceptance(opt)) failed += r.pass ? 0 : 1;
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " failing criteria\n";
  return failed ? 1 : 0;
}
