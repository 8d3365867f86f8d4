#include "lab/errors.hpp"
#include "lab/spectral.hpp"

#include <cmath>
#include <numbers>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxDegree = 500;

void check_indices(int l, int m) {
  if (l < 0 || l > kMaxDegree || std::abs(m) > l)
    fail(ErrorCode::IndexOutOfRange, "(l, m) = (" + std::to_string(l) + ", " + std::to_string(m) + ")");
}

// log of the normalized sectoral value P_m^m at sin(phi) = 1.
double log_sectoral_norm(int m) {
  return 0.5 * std::log((2.0 * m + 1) / 2) +
         0.5 * (std::lgamma(2.0 * m + 1) - 2 * std::lgamma(m + 1.0) - m * std::log(4.0));
}

double log_abs_gamma(double x, int* sign) {
  int s = 1;
  const double v = lgamma_r(x, &s);
  if (sign) *sign = s;
  return v;
}

}  // namespace

LegendreValue normalized_legendre(int l, int m, double phi) {
  m = std::abs(m);
  check_indices(l, m);
  // Measured from the equator so that phi = pi/2 gives x = 0 exactly.
  const double x = std::sin(kPi / 2 - phi);
  const double s = std::cos(kPi / 2 - phi);
  // Recurrence on scaled values; the common factor exp(log_scale) is applied at the end.
  double log_scale = log_sectoral_norm(m);
  if (m > 0) {
    if (s == 0) return {0, 0};
    log_scale += m * std::log(std::abs(s));
  }
  double prev = 0;
  double cur = 1;
  for (int ll = m + 1; ll <= l; ++ll) {
    double next;
    if (ll == m + 1) {
      // closed form cos(phi) sin^{l-1}(phi) for the column m = l - 1
      next = x * std::sqrt(2.0 * m + 3) * cur;
    } else {
      const double a = std::sqrt((4.0 * ll * ll - 1) / (double(ll) * ll - double(m) * m));
      const double b = std::sqrt((double(ll - 1) * (ll - 1) - double(m) * m) / (4.0 * (ll - 1) * (ll - 1) - 1));
      next = a * (x * cur - b * prev);
    }
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e200) {
      cur *= 1e-200;
      prev *= 1e-200;
      log_scale += 200 * std::log(10.0);
    }
  }
  const double scale = std::exp(log_scale);
  LegendreValue out;
  out.p = cur * scale;
  if (s != 0) {
    const double c = l > m ? std::sqrt((2.0 * l + 1) * (double(l) * l - double(m) * m) / (2.0 * l - 1)) : 0.0;
    out.dp_dphi = (l * x * cur - c * prev) * scale / s;
  }
  return out;
}

EigenMode sphere_mode(int l, int m) {
  check_indices(l, m);
  EigenMode mode;
  mode.manifold = ManifoldKind::Sphere2;
  mode.lambda = std::sqrt(double(l) * (l + 1));
  mode.label = {l, m, ""};
  const double c = 1 / std::sqrt(2 * kPi);
  mode.value = [l, m, c](const Vec2& x) {
    return c * normalized_legendre(l, m, x[1]).p * std::polar(1.0, m * x[0]);
  };
  mode.gradient = [l, m, c](const Vec2& x) {
    const LegendreValue p = normalized_legendre(l, m, x[1]);
    const cplx e = c * std::polar(1.0, m * x[0]);
    return Grad2(cplx(0, m) * p.p * e, p.dp_dphi * e);
  };
  return mode;
}

EigenMode sphere_real_mode(int l, int m) {
  check_indices(l, m);
  EigenMode mode;
  mode.manifold = ManifoldKind::Sphere2;
  mode.lambda = std::sqrt(double(l) * (l + 1));
  mode.label = {l, m, m > 0 ? "re" : (m < 0 ? "im" : "")};
  const int am = std::abs(m);
  const double c = m == 0 ? 1 / std::sqrt(2 * kPi) : 1 / std::sqrt(kPi);
  auto ang = [m, am](double t) { return m >= 0 ? std::cos(am * t) : std::sin(am * t); };
  auto dang = [m, am](double t) { return m >= 0 ? -am * std::sin(am * t) : am * std::cos(am * t); };
  mode.value = [l, am, c, ang](const Vec2& x) { return cplx(c * normalized_legendre(l, am, x[1]).p * ang(x[0])); };
  mode.gradient = [l, am, c, ang, dang](const Vec2& x) {
    const LegendreValue p = normalized_legendre(l, am, x[1]);
    return Grad2(c * p.p * dang(x[0]), c * p.dp_dphi * ang(x[0]));
  };
  return mode;
}

std::vector<EigenMode> sphere_real_modes(int lmax) {
  if (lmax < 0 || lmax > kMaxDegree) fail(ErrorCode::IndexOutOfRange, "lmax = " + std::to_string(lmax));
  std::vector<EigenMode> modes;
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) modes.push_back(sphere_real_mode(l, m));
  return modes;
}

SphereEquatorCauchy sphere_equator_cauchy(int l) {
  if (l < 2 || l > kMaxDegree) fail(ErrorCode::IndexOutOfRange, "l = " + std::to_string(l));
  // sqrt((2l+1)/(4 pi (2l-1)!)) 2^l sqrt(pi) / |Gamma(1/2 - l)|
  const double log_amp = 0.5 * std::log((2.0 * l + 1) / (4 * kPi)) - 0.5 * std::lgamma(2.0 * l) + l * std::log(2.0) +
                         0.5 * std::log(kPi) - log_abs_gamma(0.5 - l, nullptr);
  SphereEquatorCauchy out;
  out.amplitude = std::exp(log_amp);
  out.scaled_ratio = out.amplitude * std::sqrt(2 * kPi) / std::sqrt(double(l) * (l + 1));
  return out;
}

double sphere_equator_amplitude_recurrence(int l) {
  check_indices(l, l - 1);
  return std::abs(normalized_legendre(l, l - 1, kPi / 2).dp_dphi) / std::sqrt(2 * kPi);
}

GammaChain gamma_chain_check(int l) {
  if (l < 1 || l > 300) fail(ErrorCode::IndexOutOfRange, "l = " + std::to_string(l));
  int sign = 0;
  const double lg = log_abs_gamma(0.5 - l, &sign);
  const int expected_sign = l % 2 == 0 ? 1 : -1;
  double log_odd_product = 0;
  for (int j = 1; j <= l; ++j) log_odd_product += std::log(2.0 * j - 1);
  GammaChain out;
  out.reflection_residual = sign == expected_sign ? std::abs(lg - (std::log(kPi) - std::lgamma(l + 0.5))) : INFINITY;
  out.product_residual =
      sign == expected_sign ? std::abs(lg + log_odd_product - (l * std::log(2.0) + 0.5 * std::log(kPi))) : INFINITY;
  out.ratio = std::exp(log_odd_product - 0.5 * std::lgamma(2.0 * l) - 0.25 * std::log(double(l)));
  return out;
}

}  // namespace lab
