// Desk-scale acceptance run: one line per check, then one PASS/FAIL line per
// criterion. Exit status is nonzero if any criterion fails.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "sgjunction/acceptance.hpp"

int main(int argc, char** argv) {
  sgj::SuiteScale scale = sgj::desk_scale();
  if (argc > 1) scale.scratch = argv[1];

  std::map<int, bool> verdict;
  std::map<int, std::string> names;
  const std::map<int, std::string> titles = {
      {1, "free-operator eigenvalue"},       {2, "free operator, Z >= 0"},
      {3, "kink shift solver"},              {4, "vertex conditions"},
      {5, "kink Morse index sweep"},         {6, "anti-kink Morse index sweep"},
      {7, "quadratic-form identity"},        {8, "resolvent oracle"},
      {9, "oracle agreement"},               {10, "Z(theta) map"},
      {11, "energy conservation"},           {12, "growth-rate match"},
      {13, "stable-mode control"},           {14, "essential-spectrum edge"},
      {15, "determinism"}};

  const auto results = sgj::run_acceptance(scale, [&](const sgj::CheckResult& r) {
    std::printf("  [%s] %2d %-44s %6.1fs  expected: %s | observed: %s\n",
                r.pass ? "pass" : "FAIL", r.criterion, r.name.c_str(), r.seconds,
                r.expected.c_str(), r.observed.c_str());
    std::fflush(stdout);
  });
  for (const auto& r : results) {
    auto it = verdict.find(r.criterion);
    verdict[r.criterion] = (it == verdict.end() ? true : it->second) && r.pass;
  }
  int failed = 0;
  for (const auto& [k, title] : titles) {
    const bool ok = verdict.count(k) && verdict[k];
    failed += ok ? 0 : 1;
    std::printf("criterion %2d %s: %s\n", k, ok ? "PASS" : "FAIL", title.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(titles.size()) - failed,
              titles.size());
  return failed ? 1 : 0;
}
