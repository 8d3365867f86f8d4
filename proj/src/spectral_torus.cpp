#include "lab/errors.hpp"
#include "lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxModes = 1000000;

struct Factor {
  TorusFactor kind;
  int m;
  double c;

  cplx value(double x) const {
    switch (kind) {
      case TorusFactor::Exp: return c * std::polar(1.0, m * x);
      case TorusFactor::Cos: return c * std::cos(m * x);
      case TorusFactor::Sin: return c * std::sin(m * x);
    }
    return 0;
  }
  cplx deriv(double x) const {
    switch (kind) {
      case TorusFactor::Exp: return cplx(0, m) * c * std::polar(1.0, m * x);
      case TorusFactor::Cos: return -c * m * std::sin(m * x);
      case TorusFactor::Sin: return c * m * std::cos(m * x);
    }
    return 0;
  }
};

Factor make_factor(TorusFactor kind, int m) {
  if (kind != TorusFactor::Exp && m < 0)
    fail(ErrorCode::IndexOutOfRange, "cos/sin factors need a non-negative frequency");
  if (kind == TorusFactor::Sin && m == 0) fail(ErrorCode::IndexOutOfRange, "sin(0 x) is not a mode");
  double c = 1 / std::sqrt(2 * kPi);
  if (kind != TorusFactor::Exp && m != 0) c = 1 / std::sqrt(kPi);
  return {kind, m, c};
}

char factor_char(TorusFactor f) {
  switch (f) {
    case TorusFactor::Exp: return 'e';
    case TorusFactor::Cos: return 'c';
    case TorusFactor::Sin: return 's';
  }
  return '?';
}

int isqrt_floor(double r) {
  if (r < 0) return -1;
  long n = static_cast<long>(std::floor(std::sqrt(r)));
  while (static_cast<double>((n + 1) * (n + 1)) <= r) ++n;
  while (n > 0 && static_cast<double>(n * n) > r) --n;
  return static_cast<int>(n);
}

void sort_modes(std::vector<EigenMode>& modes) {
  std::stable_sort(modes.begin(), modes.end(), [](const EigenMode& p, const EigenMode& q) {
    const long lp = static_cast<long>(p.label.a) * p.label.a + static_cast<long>(p.label.b) * p.label.b;
    const long lq = static_cast<long>(q.label.a) * q.label.a + static_cast<long>(q.label.b) * q.label.b;
    if (lp != lq) return lp < lq;
    if (p.label.a != q.label.a) return p.label.a < q.label.a;
    if (p.label.b != q.label.b) return p.label.b < q.label.b;
    return p.label.tag < q.label.tag;
  });
}

}  // namespace

std::string ModeLabel::str() const {
  std::string s = "(" + std::to_string(a) + "," + std::to_string(b);
  if (!tag.empty()) s += "," + tag;
  return s + ")";
}

cplx EigenMode::normal_derivative(const FermiChart& chart, const Vec2& x) const {
  const Grad2 g = gradient(x);
  const Vec2 n = chart.normal(x);
  return g[0] * n[0] + g[1] * n[1];
}

EigenMode torus_mode(int m, int n, TorusFactor fx, TorusFactor fy) {
  const Factor f = make_factor(fx, m);
  const Factor g = make_factor(fy, n);
  EigenMode mode;
  mode.manifold = ManifoldKind::Torus2;
  mode.lambda = std::sqrt(static_cast<double>(m) * m + static_cast<double>(n) * n);
  mode.label = {m, n, (fx == TorusFactor::Exp && fy == TorusFactor::Exp) ? std::string("exp")
                                                                          : std::string{factor_char(fx), factor_char(fy)}};
  mode.value = [f, g](const Vec2& x) { return f.value(x[0]) * g.value(x[1]); };
  mode.gradient = [f, g](const Vec2& x) {
    return Grad2(f.deriv(x[0]) * g.value(x[1]), f.value(x[0]) * g.deriv(x[1]));
  };
  return mode;
}

std::size_t torus_mode_count(double cutoff) {
  if (!(cutoff >= 0)) fail(ErrorCode::ConfigError, "cutoff must be non-negative");
  const double l2 = cutoff * cutoff;
  const int mmax = isqrt_floor(l2);
  std::size_t count = 0;
  for (int m = -mmax; m <= mmax; ++m) count += 2 * static_cast<std::size_t>(isqrt_floor(l2 - double(m) * m)) + 1;
  return count;
}

std::vector<EigenMode> torus_modes(double cutoff) {
  const std::size_t count = torus_mode_count(cutoff);
  if (count > kMaxModes)
    fail(ErrorCode::CutoffTooLargeForMemory, std::to_string(count) + " modes below cutoff " + std::to_string(cutoff));
  const double l2 = cutoff * cutoff;
  const int mmax = isqrt_floor(l2);
  std::vector<EigenMode> modes;
  modes.reserve(count);
  for (int m = -mmax; m <= mmax; ++m) {
    const int nmax = isqrt_floor(l2 - double(m) * m);
    for (int n = -nmax; n <= nmax; ++n) modes.push_back(torus_mode(m, n));
  }
  sort_modes(modes);
  return modes;
}

std::vector<EigenMode> torus_real_modes(double cutoff) {
  const std::size_t count = torus_mode_count(cutoff);
  if (count > kMaxModes)
    fail(ErrorCode::CutoffTooLargeForMemory, std::to_string(count) + " modes below cutoff " + std::to_string(cutoff));
  const double l2 = cutoff * cutoff;
  const int mmax = isqrt_floor(l2);
  std::vector<EigenMode> modes;
  modes.reserve(count);
  for (int m = 0; m <= mmax; ++m) {
    const int nmax = isqrt_floor(l2 - double(m) * m);
    for (int n = 0; n <= nmax; ++n) {
      for (TorusFactor fx : {TorusFactor::Cos, TorusFactor::Sin}) {
        if (m == 0 && fx == TorusFactor::Sin) continue;
        for (TorusFactor fy : {TorusFactor::Cos, TorusFactor::Sin}) {
          if (n == 0 && fy == TorusFactor::Sin) continue;
          modes.push_back(torus_mode(m, n, fx, fy));
        }
      }
    }
  }
  sort_modes(modes);
  return modes;
}

}  // namespace lab
