#include "hp.hpp"
#include "lab/errors.hpp"
#include "lab/lrcontrol.hpp"
#include "lab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lab {

namespace {

constexpr unsigned kDigits = 60;
using Real = hp::Real<kDigits>;

// Below this the double value of a term or tail is an exact zero.
constexpr double kLogUnderflow = -745.2;

// g_1 derivatives at a fixed t, extended one order at a time.
class G1Series {
 public:
  G1Series(double T, double alpha, double t) : T_(T), alpha_(alpha), t_(t) {
    if (!(t > 0 && t < T)) fail(ErrorCode::OutOfInterval, "t = " + fmt17(t) + " outside (0, " + fmt17(T) + ")");
    const Real tt(t), rr = Real(T) - Real(t), a(alpha);
    inv_t_ = 1 / tt;
    inv_r_ = 1 / rr;
    g_.push_back(exp(-a * (inv_t_ + inv_r_)));
    binom_.push_back({Real(1)});
  }

  const Real& derivative(int k) {
    while (static_cast<int>(g_.size()) <= k) grow();
    return g_[k];
  }

  double tau() const { return std::min(t_, T_ - t_); }

 private:
  // p^{(j)}(t) = -alpha((-1)^j j! t^{-j-1} + j! (T-t)^{-j-1})
  const Real& pder(int j) {
    while (static_cast<int>(p_.size()) <= j) {
      const int n = static_cast<int>(p_.size());
      if (n == 0) {
        pow_t_ = inv_t_;
        pow_r_ = inv_r_;
        fact_ = 1;
        p_.push_back(-Real(alpha_) * (pow_t_ + pow_r_));
        continue;
      }
      pow_t_ *= inv_t_;
      pow_r_ *= inv_r_;
      fact_ *= n;
      const Real sgn = n % 2 == 0 ? Real(1) : Real(-1);
      p_.push_back(-Real(alpha_) * fact_ * (sgn * pow_t_ + pow_r_));
    }
    return p_[j];
  }

  // g^{(k+1)} = sum_{j<=k} C(k, j) p^{(j+1)} g^{(k-j)}
  void grow() {
    const int k = static_cast<int>(g_.size()) - 1;
    while (static_cast<int>(binom_.size()) <= k) {
      const auto& prev = binom_.back();
      std::vector<Real> row(prev.size() + 1);
      row.front() = 1;
      row.back() = 1;
      for (std::size_t i = 1; i + 1 < row.size(); ++i) row[i] = prev[i - 1] + prev[i];
      binom_.push_back(std::move(row));
    }
    Real acc = 0;
    for (int j = 0; j <= k; ++j) {
      const Real c = binom_[k][j] * pder(j + 1);
      hp::fma_into(acc, c, g_[k - j]);
    }
    g_.push_back(acc);
  }

  double T_, alpha_, t_;
  Real inv_t_, inv_r_, pow_t_, pow_r_, fact_;
  std::vector<Real> g_, p_;
  std::vector<std::vector<Real>> binom_;
};

double log_abs(const Real& x) {
  if (x == 0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(log(abs(x)));
}

double log_factorial(int k) { return std::lgamma(k + 1.0); }

// log of k!/(delta tau)^k exp(-alpha/((1+delta) tau))
double log_derivative_bound(int k, double delta, double alpha, double tau) {
  return log_factorial(k) - k * std::log(delta * tau) - alpha / ((1 + delta) * tau);
}

// log of |s| exp((s^2/delta - alpha/(1+delta))/tau)
double log_kernel_bound(double s, double delta, double alpha, double tau) {
  return std::log(std::abs(s)) + (s * s / delta - alpha / (1 + delta)) / tau;
}

// Series coefficients g_1^{(k)}(t)/(2k+1)! for k < n.
std::vector<Real> kernel_coeffs(G1Series& g, int n) {
  std::vector<Real> c(n);
  Real fact = 1;
  for (int k = 0; k < n; ++k) {
    if (k > 0) fact *= Real(2 * k) * Real(2 * k + 1);
    c[k] = g.derivative(k) / fact;
  }
  return c;
}

Real eval_series(const std::vector<Real>& c, const Real& s) {
  const Real s2 = s * s;
  Real acc = 0;
  for (std::size_t k = c.size(); k-- > 0;) {
    acc *= s2;
    acc += c[k];
  }
  return acc * s;
}

}  // namespace

TransmutationKernel TransmutationKernel::make(double T, double S, double delta, double alpha) {
  TransmutationKernel k;
  k.T = T;
  k.S = S;
  k.delta = delta;
  k.alpha = alpha > 0 ? alpha : 1.05 * S * S * (1 + 1 / delta);
  k.validate();
  return k;
}

void TransmutationKernel::validate() const {
  if (!(T > 0) || !(S > 0)) fail(ErrorCode::ConfigError, "kernel needs T > 0 and S > 0");
  if (!(delta > 0 && delta < 1)) fail(ErrorCode::ConfigError, "delta must lie in (0, 1)");
  if (!(alpha > S * S * (1 + 1 / delta)))
    fail(ErrorCode::ConfigError, "alpha = " + fmt17(alpha) + " must exceed S^2 (1 + 1/delta)");
  if (n_max < 1 || !(tol > 0)) fail(ErrorCode::ConfigError, "bad truncation settings");
}

std::vector<double> g1_derivatives(double T, double alpha, double t, int k_max) {
  if (k_max < 0) fail(ErrorCode::ConfigError, "k_max must be non-negative");
  G1Series g(T, alpha, t);
  std::vector<double> out(k_max + 1);
  for (int k = 0; k <= k_max; ++k) out[k] = static_cast<double>(g.derivative(k));
  return out;
}

std::vector<double> g1_log_abs_derivatives(double T, double alpha, double t, int k_max) {
  if (k_max < 0) fail(ErrorCode::ConfigError, "k_max must be non-negative");
  G1Series g(T, alpha, t);
  std::vector<double> out(k_max + 1);
  for (int k = 0; k <= k_max; ++k) out[k] = log_abs(g.derivative(k));
  return out;
}

KernelValue transmutation_eval(const TransmutationKernel& K, double t, double s) {
  K.validate();
  if (std::abs(s) > K.S * (1 + 1e-12)) fail(ErrorCode::OutOfInterval, "|s| = " + fmt17(std::abs(s)) + " > S");
  G1Series g(K.T, K.alpha, t);
  KernelValue out;
  if (s == 0) return out;
  const double tau = g.tau();
  const Real ss(s), s2 = ss * ss;
  Real power = ss, fact = 1, partial = 0;
  int small = 0;
  int k = 0;
  for (; k <= K.n_max; ++k) {
    if (k > 0) {
      power *= s2;
      fact *= Real(2 * k) * Real(2 * k + 1);
    }
    const Real term = power / fact * g.derivative(k);
    partial += term;
    out.terms = k + 1;
    const bool tiny = abs(term) <= Real(K.tol) * abs(partial);
    small = tiny ? small + 1 : 0;
    if (small >= 2) break;
  }
  // Tail beyond the last term from the derivative bound, geometric once the ratio drops below 1,
  // and never more than the whole-series bound.
  const int next = std::min(k, K.n_max) + 1;
  double log_tail = log_kernel_bound(s, K.delta, K.alpha, tau);
  const double ratio = s * s * (next + 1) / ((2.0 * next + 2) * (2.0 * next + 3) * K.delta * tau);
  if (ratio < 1) {
    const double log_b = (2 * next + 1) * std::log(std::abs(s)) - std::lgamma(2.0 * next + 2) +
                         log_derivative_bound(next, K.delta, K.alpha, tau);
    log_tail = std::min(log_tail, log_b - std::log1p(-ratio));
  }
  out.value = static_cast<double>(partial);
  out.tail_bound = log_tail < kLogUnderflow ? 0.0 : std::exp(log_tail);
  if (small < 2 && log_tail > kLogUnderflow && log_tail > std::log(K.tol) + log_abs(partial))
    fail(ErrorCode::SeriesNotConverged, "kernel series at t = " + fmt17(t) + ", s = " + fmt17(s) + " after " +
                                            std::to_string(K.n_max) + " terms");
  return out;
}

KernelReport kernel_verify(const TransmutationKernel& K, int grid, double step) {
  K.validate();
  if (grid < 4) fail(ErrorCode::TooFewNodes, "kernel grid needs at least 4 nodes per direction");
  const double T = K.T, S = K.S;
  std::vector<double> ts(grid), ss(grid);
  for (int i = 0; i < grid; ++i) {
    ts[i] = T * (i + 1) / (grid + 1);
    ss[i] = -S + 2 * S * (i + 1) / (grid + 1);
  }
  if (ts.front() - 2 * step <= 0) fail(ErrorCode::OutOfInterval, "stencil step reaches t = 0");

  const int n_coeff = K.n_max + 1;
  struct Row {
    Real value_max = 0;
    Real res = 0, res_half = 0;
    std::vector<Real> values;
    double bound_worst = -INFINITY;
    double deriv_worst = -INFINITY;
    double ds0 = 0;
  };
  std::vector<Row> rows(grid);
  parallel_for(static_cast<std::size_t>(grid), [&](std::size_t i) {
    Row& row = rows[i];
    const double t = ts[i];
    G1Series g0(T, K.alpha, t);
    const std::vector<Real> c0 = kernel_coeffs(g0, n_coeff);
    const double tau = g0.tau();
    for (int k = 0; k <= 40; ++k)
      row.deriv_worst =
          std::max(row.deriv_worst, log_abs(g0.derivative(k)) - log_derivative_bound(k, K.delta, K.alpha, tau));
    {
      const Real h(1e-5);
      const Real d = (eval_series(c0, h) - eval_series(c0, -h)) / (2 * h);
      row.ds0 = static_cast<double>(abs(d - g0.derivative(0)));
    }
    auto residual = [&](double hstep) {
      std::vector<std::vector<Real>> cs;
      for (int m : {-2, -1, 1, 2}) {
        G1Series g(T, K.alpha, t + m * hstep);
        cs.push_back(kernel_coeffs(g, n_coeff));
      }
      const Real h(hstep);
      Real worst = 0;
      for (int j = 0; j < grid; ++j) {
        const Real s(ss[j]);
        const Real dt = (-eval_series(cs[3], s) + 8 * eval_series(cs[2], s) - 8 * eval_series(cs[1], s) +
                         eval_series(cs[0], s)) /
                        (12 * h);
        const Real dss = (-eval_series(c0, s + 2 * h) + 16 * eval_series(c0, s + h) - 30 * eval_series(c0, s) +
                          16 * eval_series(c0, s - h) - eval_series(c0, s - 2 * h)) /
                         (12 * h * h);
        worst = std::max(worst, Real(abs(dt - dss)));
      }
      return worst;
    };
    row.res = residual(step);
    row.res_half = residual(step / 2);
    row.values.resize(grid);
    for (int j = 0; j < grid; ++j) {
      row.values[j] = eval_series(c0, Real(ss[j]));
      row.value_max = std::max(row.value_max, Real(abs(row.values[j])));
      row.bound_worst =
          std::max(row.bound_worst, log_abs(row.values[j]) - log_kernel_bound(ss[j], K.delta, K.alpha, tau));
    }
  });

  KernelReport rep;
  rep.grid = grid;
  rep.step = step;
  Real vmax = 0, res = 0, res_half = 0;
  for (const Row& r : rows) {
    vmax = std::max(vmax, r.value_max);
    res = std::max(res, r.res);
    res_half = std::max(res_half, r.res_half);
    rep.bound_worst = std::max(rep.bound_worst, r.bound_worst);
    rep.deriv_bound_worst = std::max(rep.deriv_bound_worst, r.deriv_worst);
    rep.ds0_error = std::max(rep.ds0_error, r.ds0);
  }
  if (rows.empty()) rep.bound_worst = rep.deriv_bound_worst = -INFINITY;
  rep.max_abs = static_cast<double>(vmax);
  rep.residual = static_cast<double>(res / vmax);
  rep.residual_half = static_cast<double>(res_half / vmax);
  rep.order = std::log2(rep.residual / rep.residual_half);
  Real sym = 0, odd = 0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      sym = std::max(sym, Real(abs(rows[grid - 1 - i].values[j] - rows[i].values[j])));
      odd = std::max(odd, Real(abs(rows[i].values[grid - 1 - j] + rows[i].values[j])));
    }
  rep.symmetry = static_cast<double>(sym / vmax);
  rep.odd = static_cast<double>(odd / vmax);
  for (double t : ts) rep.s0_max = std::max(rep.s0_max, std::abs(transmutation_eval(K, t, 0).value));
  for (double s : ss) {
    rep.near_zero = std::max(rep.near_zero, std::abs(transmutation_eval(K, 1e-6 * T, s).value));
    rep.near_T = std::max(rep.near_T, std::abs(transmutation_eval(K, T - 1e-6 * T, s).value));
  }
  return rep;
}

}  // namespace lab
