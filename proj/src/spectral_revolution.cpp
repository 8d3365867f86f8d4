#include "lab/errors.hpp"
#include "lab/numeric.hpp"
#include "lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;

// Potential 1/R^2 + h^2 V1 at the grid nodes 0..n.
std::vector<double> grid_potential(const RevolutionProfile& p, double h, int n, double dz) {
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) {
    const ProfileValues v = p.eval(i * dz);
    w[i] = v.V + h * h * v.V1_conj;
  }
  return w;
}

// psi at node i in [-2, n + 2] using the parity at 0 and the odd reflection at pi.
double node_value(const std::vector<double>& psi, int n, int i, int parity) {
  if (i < 0) return parity * psi[-i];
  if (i > n) return -psi[2 * n - i];
  return psi[i];
}

const RadialPair& pair_at(const RadialEigenproblem& prob, std::size_t index) {
  if (index >= prob.pairs.size())
    fail(ErrorCode::IndexOutOfRange, "eigenpair " + std::to_string(index) + " of " + std::to_string(prob.pairs.size()));
  return prob.pairs[index];
}

int parity_of(RadialBc bc) { return bc == RadialBc::Neumann ? 1 : -1; }

struct RevolutionData {
  RevolutionProfile profile;
  int k;
  int parity;
  int n;
  double dz;
  double norm;
  std::vector<double> psi;
  std::vector<double> dpsi;

  // psi and psi' at |z| by cubic Hermite interpolation.
  std::pair<double, double> radial(double za) const {
    const double u = za / dz;
    int i = static_cast<int>(std::floor(u));
    if (i >= n) i = n - 1;
    const double t = u - i;
    const double p0 = psi[i], p1 = psi[i + 1], m0 = dpsi[i] * dz, m1 = dpsi[i + 1] * dz;
    const double t2 = t * t, t3 = t2 * t;
    const double val = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
    const double der = ((6 * t2 - 6 * t) * p0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * p1 + (3 * t2 - 2 * t) * m1) / dz;
    return {val, der};
  }
};

void check_z(double z) {
  if (!(std::abs(z) <= kPi * (1 + 1e-14))) fail(ErrorCode::OutOfChart, "z = " + std::to_string(z));
}

}  // namespace

const char* bc_name(RadialBc bc) { return bc == RadialBc::Dirichlet ? "dirichlet" : "neumann"; }

int RadialEigenproblem::count_in_window() const {
  return static_cast<int>(
      std::count_if(pairs.begin(), pairs.end(), [&](const RadialPair& p) { return p.E > window_lo && p.E <= window_hi; }));
}

RadialEigenproblem radial_eigensolve_h(const RevolutionProfile& profile, double h, RadialBc bc0, int grid_n, double lo,
                                       double hi, double margin) {
  if (grid_n < 200) fail(ErrorCode::ConfigError, "grid_n must be at least 200");
  if (!(h > 0)) fail(ErrorCode::ConfigError, "h must be positive");
  if (!(hi > lo) || margin < 0) fail(ErrorCode::ConfigError, "bad energy window");
  RadialEigenproblem prob;
  prob.profile = profile;
  prob.h = h;
  const double kk = 1 / h;
  prob.k = std::abs(kk - std::round(kk)) < 1e-12 ? static_cast<int>(std::round(kk)) : 0;
  prob.bc0 = bc0;
  prob.grid_n = grid_n;
  prob.dz = kPi / grid_n;
  prob.window_lo = lo;
  prob.window_hi = hi;
  prob.margin = margin;
  const int n = grid_n;
  const double c = h * h / (prob.dz * prob.dz);
  const std::vector<double> w = grid_potential(profile, h, n, prob.dz);
  const int first = bc0 == RadialBc::Neumann ? 0 : 1;
  std::vector<double> d, e;
  for (int i = first; i < n; ++i) d.push_back(2 * c + w[i]);
  e.assign(d.size() - 1, -c);
  // Neumann: mirror ghost psi_{-1} = psi_1, symmetrized with phi_0 = psi_0 / sqrt 2.
  if (bc0 == RadialBc::Neumann) e[0] = -std::sqrt(2.0) * c;
  const TridiagEig eig = tridiag_eig_range(d, e, lo - margin, hi + margin);
  const double s = 1 / std::sqrt(prob.dz);
  for (std::size_t j = 0; j < eig.values.size(); ++j) {
    RadialPair pr;
    pr.E = eig.values[j];
    pr.psi.assign(n + 1, 0.0);
    for (int i = first; i < n; ++i) pr.psi[i] = eig.vectors(i - first, j) * s;
    if (bc0 == RadialBc::Neumann) pr.psi[0] *= std::sqrt(2.0);
    std::size_t big = 0;
    for (std::size_t i = 1; i < pr.psi.size(); ++i)
      if (std::abs(pr.psi[i]) > std::abs(pr.psi[big])) big = i;
    if (pr.psi[big] < 0)
      for (double& v : pr.psi) v = -v;
    prob.pairs.push_back(std::move(pr));
  }
  return prob;
}

RadialEigenproblem radial_eigensolve(const RevolutionProfile& profile, int k, RadialBc bc0, int grid_n, double lo,
                                     double hi, double margin) {
  if (k < 2) fail(ErrorCode::ConfigError, "k must be at least 2");
  RadialEigenproblem prob = radial_eigensolve_h(profile, 1.0 / k, bc0, grid_n, lo, hi, margin);
  prob.k = k;
  return prob;
}

double radial_discrete_residual(const RadialEigenproblem& prob, std::size_t index) {
  const RadialPair& pr = pair_at(prob, index);
  const int n = prob.grid_n;
  const double c = prob.h * prob.h / (prob.dz * prob.dz);
  const std::vector<double> w = grid_potential(prob.profile, prob.h, n, prob.dz);
  const bool neumann = prob.bc0 == RadialBc::Neumann;
  std::vector<double> phi(pr.psi);
  if (neumann) phi[0] /= std::sqrt(2.0);
  double r2 = 0, p2 = 0;
  for (int i = neumann ? 0 : 1; i < n; ++i) {
    double off = 0;
    if (i == 0) {
      off = -std::sqrt(2.0) * c * phi[1];
    } else {
      const double left = (i == 1 && neumann) ? std::sqrt(2.0) * phi[0] : phi[i - 1];
      off = -c * (left + phi[i + 1]);
    }
    const double r = (2 * c + w[i] - pr.E) * phi[i] + off;
    r2 += r * r;
    p2 += phi[i] * phi[i];
  }
  return std::sqrt(r2 / p2);
}

double radial_extended_residual(const RadialEigenproblem& prob, std::size_t index) {
  const RadialPair& pr = pair_at(prob, index);
  const int n = prob.grid_n;
  const int parity = parity_of(prob.bc0);
  const double c = prob.h * prob.h / (prob.dz * prob.dz);
  const std::vector<double> w = grid_potential(prob.profile, prob.h, n, prob.dz);
  double r2 = 0, p2 = 0;
  for (int i = -n + 1; i < n; ++i) {
    const double v = node_value(pr.psi, n, i, parity);
    const double r = -c * (node_value(pr.psi, n, i - 1, parity) - 2 * v + node_value(pr.psi, n, i + 1, parity)) +
                     (w[std::abs(i)] - pr.E) * v;
    r2 += r * r;
    p2 += v * v;
  }
  return std::sqrt(r2 / p2);
}

double radial_continuum_residual(const RadialEigenproblem& prob, std::size_t index) {
  const RadialPair& pr = pair_at(prob, index);
  const int n = prob.grid_n;
  const int parity = parity_of(prob.bc0);
  const double h2 = prob.h * prob.h;
  const double dz2 = prob.dz * prob.dz;
  const std::vector<double> w = grid_potential(prob.profile, prob.h, n, prob.dz);
  auto at = [&](int i) { return node_value(pr.psi, n, i, parity); };
  double r2 = 0, p2 = 0;
  for (int i = 0; i < n; ++i) {
    const double d2 = (-at(i - 2) + 16 * at(i - 1) - 30 * at(i) + 16 * at(i + 1) - at(i + 2)) / (12 * dz2);
    const double r = -h2 * d2 + (w[i] - pr.E) * at(i);
    const double wt = i == 0 ? 0.5 : 1.0;
    r2 += wt * r * r;
    p2 += wt * at(i) * at(i);
  }
  return std::sqrt(r2 / p2);
}

double weyl_prediction(const RevolutionProfile& profile, double h, double lo, double hi) {
  if (!(h > 0)) fail(ErrorCode::ConfigError, "h must be positive");
  // Composite Gauss-Legendre; the square-root kinks at turning points limit accuracy to about 1e-6.
  const GaussRule g = gauss_legendre(8);
  const int cells = 4096;
  const double dz = kPi / cells;
  double area = 0;
  for (int c = 0; c < cells; ++c) {
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double z = (c + 0.5 * (g.nodes[q] + 1)) * dz;
      const double v = 1 / (profile.R(z) * profile.R(z));
      area += 0.5 * dz * g.weights[q] * 2 * (std::sqrt(std::max(hi - v, 0.0)) - std::sqrt(std::max(lo - v, 0.0)));
    }
  }
  return area / (2 * kPi * h);
}

WeylResult weyl_count(const RevolutionProfile& profile, double h, double lo, double hi, int grid_n, RadialBc bc0) {
  WeylResult out;
  const RadialEigenproblem prob = radial_eigensolve_h(profile, h, bc0, grid_n, lo, hi);
  out.count = prob.count_in_window();
  out.prediction = weyl_prediction(profile, h, lo, hi);
  return out;
}

int window_onset(const RevolutionProfile& profile, int kmin, int kmax, double lo, double hi, int grid_n) {
  if (kmin < 2 || kmax < kmin) fail(ErrorCode::ConfigError, "bad k range");
  std::vector<char> ok(kmax - kmin + 1, 0);
  parallel_for(ok.size(), [&](std::size_t i) {
    const int k = kmin + static_cast<int>(i);
    ok[i] = radial_eigensolve(profile, k, RadialBc::Neumann, grid_n, lo, hi).count_in_window() > 0 &&
            radial_eigensolve(profile, k, RadialBc::Dirichlet, grid_n, lo, hi).count_in_window() > 0;
  });
  int onset = -1;
  for (int i = static_cast<int>(ok.size()) - 1; i >= 0 && ok[i]; --i) onset = kmin + i;
  return onset;
}

EigenMode extend_by_involution(const RadialEigenproblem& prob, std::size_t index, const std::string& parity) {
  const RadialPair& pr = pair_at(prob, index);
  const std::string own = prob.bc0 == RadialBc::Neumann ? "e" : "o";
  if (!parity.empty() && parity != own)
    fail(ErrorCode::ParityMismatch, "requested parity " + parity + " but bc0 is " + bc_name(prob.bc0));
  if (prob.k < 1) fail(ErrorCode::ConfigError, "extension needs an integer angular index");
  auto data = std::make_shared<RevolutionData>(RevolutionData{
      prob.profile, prob.k, parity_of(prob.bc0), prob.grid_n, prob.dz, 1 / std::sqrt(4 * kPi), pr.psi, {}});
  RevolutionData& d = *data;
  d.dpsi.assign(d.n + 1, 0.0);
  for (int i = 0; i <= d.n; ++i) {
    auto at = [&](int j) { return node_value(d.psi, d.n, j, d.parity); };
    d.dpsi[i] = (-at(i + 2) + 8 * at(i + 1) - 8 * at(i - 1) + at(i - 2)) / (12 * d.dz);
  }
  if (d.parity > 0) d.dpsi[0] = 0;
  else d.psi[0] = 0;

  EigenMode mode;
  mode.manifold = ManifoldKind::Revolution;
  mode.lambda = prob.k * std::sqrt(pr.E);
  mode.label = {prob.k, static_cast<int>(index), own};
  mode.grid_step = prob.dz;
  mode.profile_coeffs = prob.profile.cos_coeffs();
  mode.value = [data](const Vec2& x) {
    check_z(x[0]);
    const RevolutionData& d = *data;
    const double sgn = (x[0] < 0 && d.parity < 0) ? -1.0 : 1.0;
    const double r = d.profile.R(x[0]);
    return sgn * d.radial(std::abs(x[0])).first / std::sqrt(r) * d.norm * std::polar(1.0, d.k * x[1]);
  };
  mode.gradient = [data](const Vec2& x) {
    check_z(x[0]);
    const RevolutionData& d = *data;
    const auto [v, dv] = d.radial(std::abs(x[0]));
    const double zs = x[0] < 0 ? -1.0 : 1.0;
    const double sgn = (x[0] < 0 && d.parity < 0) ? -1.0 : 1.0;
    const ProfileValues pv = d.profile.eval(x[0]);
    const double psi = sgn * v;
    const double dpsi = sgn * zs * dv;
    const cplx e = d.norm * std::polar(1.0, d.k * x[1]);
    const double rs = std::sqrt(pv.R);
    const cplx u = psi / rs * e;
    return Grad2((dpsi / rs - 0.5 * pv.dR * psi / (pv.R * rs)) * e, cplx(0, d.k) * u);
  };
  return mode;
}

double turning_point(const RevolutionProfile& profile, double E) {
  auto f = [&](double z) { return 1 / (profile.R(z) * profile.R(z)) - E; };
  if (f(0) <= 0) return 0;
  const int scan = 4096;
  double a = 0;
  for (int i = 1; i <= scan; ++i) {
    double b = kPi * i / scan;
    if (f(b) <= 0) {
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double mid = 0.5 * (a + b);
        (f(mid) > 0 ? a : b) = mid;
      }
      return 0.5 * (a + b);
    }
    a = b;
  }
  return kPi;
}

double agmon_distance(const RevolutionProfile& profile, double E) {
  const double ze = turning_point(profile, E);
  if (ze == 0) return 0;
  // z = ze (1 - s^2) removes the square-root endpoint behaviour.
  const GaussRule g = gauss_legendre(64);
  double sum = 0;
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    const double s = 0.5 * (g.nodes[q] + 1);
    const double z = ze * (1 - s * s);
    const double v = 1 / (profile.R(z) * profile.R(z));
    sum += 0.5 * g.weights[q] * std::sqrt(std::max(v - E, 0.0)) * 2 * ze * s;
  }
  return sum;
}

AgmonFit agmon_rate_fit(const RevolutionProfile& profile, const std::vector<int>& ks, double eps, double lo, double hi,
                        int grid_n, RadialBc bc0) {
  if (ks.size() < 4) fail(ErrorCode::InsufficientPoints, "need at least 4 values of k");
  if (!(eps > 0 && eps < kPi)) fail(ErrorCode::ConfigError, "eps must lie in (0, pi)");
  std::vector<AgmonRow> rows(ks.size());
  std::vector<char> have(ks.size(), 0);
  parallel_for(ks.size(), [&](std::size_t i) {
    const RadialEigenproblem prob = radial_eigensolve(profile, ks[i], bc0, grid_n, lo, hi);
    if (prob.pairs.empty()) return;
    const RadialPair& pr = prob.pairs.back();
    double sup = 0;
    for (int j = 0; j * prob.dz <= eps + 1e-12; ++j) sup = std::max(sup, std::abs(pr.psi[j]));
    rows[i] = {ks[i], pr.E, sup};
    have[i] = 1;
  });
  AgmonFit fit;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!have[i] || !(rows[i].sup_near_sigma > 0)) continue;
    fit.rows.push_back(rows[i]);
    x.push_back(ks[i]);
    y.push_back(std::log(rows[i].sup_near_sigma));
  }
  if (x.size() < 4) fail(ErrorCode::InsufficientPoints, "fewer than 4 values of k have window eigenvalues");
  const LinearFit lf = linear_fit(x, y);
  fit.c_fit = -lf.slope;
  fit.r2 = lf.r2;
  fit.prediction = INFINITY;
  for (int j = 0; j <= 64; ++j) fit.prediction = std::min(fit.prediction, agmon_distance(profile, lo + (hi - lo) * j / 64));
  return fit;
}

}  // namespace lab
