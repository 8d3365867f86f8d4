#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace lab {

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1].
GaussRule gauss_legendre(int n);

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

SymEig sym_eig(const Eigen::MatrixXd& a, bool want_vectors = true);

struct TridiagEig {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
};

// Eigenpairs of the symmetric tridiagonal (d, e) with eigenvalue in (lo, hi].
TridiagEig tridiag_eig_range(const std::vector<double>& d, const std::vector<double>& e, double lo, double hi);

// Number of workers from LAB_THREADS, else hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n) across workers; iterations are independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

std::string fmt17(double v);

}  // namespace lab
