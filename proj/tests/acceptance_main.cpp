#include "lab/expcli.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

// Usage: acceptance [criterion ids...]
int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (int i = 1; i <= lab::criterion_count(); ++i) ids.push_back(i);
  int failed = 0;
  lab::run_acceptance(ids, [&](const lab::CriterionResult& r) {
    std::printf("%s\n", lab::format_criterion(r).c_str());
    std::fflush(stdout);
    if (!r.pass()) ++failed;
  });
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ids.size()) - failed, ids.size());
  return failed == 0 ? 0 : 1;
}
