#include "lab/numeric.hpp"

#include "lab/errors.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <thread>

namespace lab {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::InsufficientPoints, "linear fit needs two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    double w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

SymEig sym_eig(const Eigen::MatrixXd& a, bool want_vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  SymEig out;
  out.vectors = a;
  out.values.resize(n);
  if (n == 0) return out;
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n, out.vectors.data(), n,
                                   out.values.data());
  if (info != 0) fail(ErrorCode::GramianSingular, "dsyevd failed with info " + std::to_string(info));
  if (!want_vectors) out.vectors.resize(0, 0);
  return out;
}

TridiagEig tridiag_eig_range(const std::vector<double>& d, const std::vector<double>& e, double lo, double hi) {
  const lapack_int n = static_cast<lapack_int>(d.size());
  std::vector<double> dd = d;
  std::vector<double> ee(e);
  ee.resize(std::max<lapack_int>(n, 1), 0.0);
  lapack_int m = 0;
  std::vector<double> w(n);
  Eigen::MatrixXd z(n, n);
  std::vector<lapack_int> isuppz(2 * n);
  lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'V', n, dd.data(), ee.data(), lo, hi, 0, 0, 0.0, &m,
                                   w.data(), z.data(), n, isuppz.data());
  if (info != 0) fail(ErrorCode::IntegratorDivergence, "dstevr failed with info " + std::to_string(info));
  TridiagEig out;
  out.values.assign(w.begin(), w.begin() + m);
  out.vectors = z.leftCols(m);
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("LAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace lab
