#pragma once

#include "lab/spectral.hpp"

#include <string>
#include <vector>

namespace lab::detail {

// Highest window eigenpair per k and parity, with its Cauchy data on the waist. E is NaN for an empty window.
struct RevolutionRow {
  int k = 0;
  std::string parity;
  double E = 0;
  double lambda = 0;
  CauchyData cauchy;
};

std::vector<RevolutionRow> revolution_rows(const RevolutionProfile& profile, const std::vector<int>& ks, int grid);

}  // namespace lab::detail
