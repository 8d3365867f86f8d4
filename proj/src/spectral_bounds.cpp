#include "lab/errors.hpp"
#include "lab/numeric.hpp"
#include "lab/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;

double sq_norm(const Eigen::VectorXcd& v, const std::vector<double>& w) {
  double s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += w[i] * std::norm(v[i]);
  return s;
}

}  // namespace

void check_mode_manifold(const EigenMode& mode, const ManifoldModel& m) {
  if (mode.manifold != m.kind())
    fail(ErrorCode::ManifoldMismatch,
         std::string("mode lives on ") + kind_name(mode.manifold) + ", surface on " + kind_name(m.kind()));
  if (m.kind() == ManifoldKind::Revolution && mode.profile_coeffs != m.profile().cos_coeffs())
    fail(ErrorCode::ManifoldMismatch, "mode was computed for a different profile");
}

TraceSamples sample_traces(const EigenMode& mode, const ManifoldModel& m, const Hypersurface& sigma,
                           const SigmaQuadrature& quad) {
  check_mode_manifold(mode, m);
  const std::vector<FermiChart> charts = fermi_charts(m, sigma);
  TraceSamples t;
  const Eigen::Index n = static_cast<Eigen::Index>(quad.nodes.size());
  t.trace.resize(n);
  t.normal.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SigmaNode& node = quad.nodes[i];
    t.trace[i] = mode.value(node.point);
    t.normal[i] = mode.normal_derivative(charts.at(node.component), node.point);
  }
  return t;
}

CauchyData cauchy_data(const EigenMode& mode, const ManifoldModel& m, const Hypersurface& sigma,
                       const SigmaQuadrature& quad) {
  const TraceSamples t = sample_traces(mode, m, sigma, quad);
  CauchyData c;
  c.trace_norm = std::sqrt(sq_norm(t.trace, quad.weights));
  c.normal_norm = std::sqrt(sq_norm(t.normal, quad.weights));
  c.scaled_normal_norm = c.normal_norm / japanese(mode.lambda);
  c.combined = c.trace_norm + c.scaled_normal_norm;
  return c;
}

const char* bound_name(BoundKind b) {
  switch (b) {
    case BoundKind::GenLow: return "genLow";
    case BoundKind::Unique: return "unique";
    case BoundKind::UniqueControl: return "uniqueControl";
  }
  return "?";
}

BoundKind parse_bound(const std::string& s) {
  if (s == "genLow") return BoundKind::GenLow;
  if (s == "unique") return BoundKind::Unique;
  if (s == "uniqueControl") return BoundKind::UniqueControl;
  fail(ErrorCode::ConfigError, "unknown bound '" + s + "'");
}

BoundSweepTable lower_bound_sweep(const std::vector<EigenMode>& modes, const ManifoldModel& m,
                                  const Hypersurface& sigma, const SigmaQuadrature& quad, BoundKind which) {
  if (modes.empty()) fail(ErrorCode::EmptyInput, "no modes to sweep");
  for (const EigenMode& mode : modes) check_mode_manifold(mode, m);
  std::vector<std::size_t> order(modes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return modes[a].lambda < modes[b].lambda; });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t idx : order) {
    const double l2 = modes[idx].lambda * modes[idx].lambda;
    if (!groups.empty()) {
      const double g2 = modes[groups.back().front()].lambda * modes[groups.back().front()].lambda;
      if (std::abs(l2 - g2) <= 1e-9 * (1 + g2)) {
        groups.back().push_back(idx);
        continue;
      }
    }
    groups.push_back({idx});
  }
  BoundSweepTable table;
  table.rows.resize(groups.size());
  parallel_for(groups.size(), [&](std::size_t g) {
    const auto& grp = groups[g];
    const Eigen::Index n = static_cast<Eigen::Index>(quad.nodes.size());
    const Eigen::Index d = static_cast<Eigen::Index>(grp.size());
    const double lambda = modes[grp.front()].lambda;
    const double s = which == BoundKind::GenLow ? 1.0 : 1 / japanese(lambda);
    Eigen::MatrixXcd tr(n, d), nr(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const TraceSamples t = sample_traces(modes[grp[j]], m, sigma, quad);
      tr.col(j) = t.trace;
      nr.col(j) = s * t.normal;
    }
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = quad.weights[i];
    Eigen::MatrixXcd q = tr.adjoint() * w.asDiagonal() * tr + nr.adjoint() * w.asDiagonal() * nr;
    q = 0.5 * (q + q.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q, Eigen::EigenvaluesOnly);
    table.rows[g] = {lambda, static_cast<int>(d), es.eigenvalues()[0], which};
  });
  return table;
}

Eigen::MatrixXcd area_gram(const std::vector<EigenMode>& modes, const ManifoldModel& m, int n1, int n2) {
  if (modes.empty()) fail(ErrorCode::EmptyInput, "no modes");
  if (n2 < 4 || (m.kind() != ManifoldKind::Revolution && n1 < 4))
    fail(ErrorCode::TooFewNodes, "area quadrature needs at least 4 nodes per direction");
  for (const EigenMode& mode : modes) check_mode_manifold(mode, m);
  std::vector<Vec2> pts;
  std::vector<double> wts;
  switch (m.kind()) {
    case ManifoldKind::Torus2:
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
          pts.emplace_back(-kPi + 2 * kPi * i / n1, -kPi + 2 * kPi * j / n2);
          wts.push_back(4 * kPi * kPi / (double(n1) * n2));
        }
      break;
    case ManifoldKind::Sphere2: {
      // Gauss-Legendre in cos(phi), trapezoid in theta.
      const GaussRule g = gauss_legendre(n1);
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
          pts.emplace_back(2 * kPi * j / n2, std::acos(g.nodes[i]));
          wts.push_back(g.weights[i] * 2 * kPi / n2);
        }
      break;
    }
    case ManifoldKind::Revolution: {
      // Trapezoid on the modes' own z-grid, weighted by the volume element R dz dtheta.
      const double dz = modes.front().grid_step;
      for (const EigenMode& mode : modes)
        if (mode.grid_step != dz) fail(ErrorCode::ConfigError, "revolution modes on different grids");
      const int nz = static_cast<int>(std::lround(kPi / dz));
      for (int i = -nz + 1; i < nz; ++i)
        for (int j = 0; j < n2; ++j) {
          const double z = i * dz;
          pts.emplace_back(z, 2 * kPi * j / n2);
          wts.push_back(m.profile().R(z) * dz * 2 * kPi / n2);
        }
      break;
    }
  }
  Eigen::MatrixXcd u(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(modes.size()));
  parallel_for(modes.size(), [&](std::size_t a) {
    for (std::size_t p = 0; p < pts.size(); ++p) u(p, a) = std::sqrt(wts[p]) * modes[a].value(pts[p]);
  });
  return u.adjoint() * u;
}

double mode_residual(const EigenMode& mode, const ManifoldModel& m, int samples, double step) {
  check_mode_manifold(mode, m);
  if (m.kind() == ManifoldKind::Revolution)
    fail(ErrorCode::ConfigError, "revolution modes are checked through the radial residuals");
  const double h = step > 0 ? step : 0.003 / std::max(1.0, mode.lambda);
  auto d1 = [&](const Vec2& x, int axis) {
    Vec2 e = Vec2::Zero();
    e[axis] = h;
    auto g = [&](const Vec2& p) { return mode.gradient(p)[axis]; };
    return (-g(x + 2 * e) + 8.0 * g(x + e) - 8.0 * g(x - e) + g(x - 2 * e)) / (12 * h);
  };
  double r2 = 0, u2 = 0;
  const double golden = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < samples; ++i) {
    const double a = (i + 0.5) / samples;
    const double b = std::fmod(0.5 + i * golden, 1.0);
    Vec2 x;
    cplx lap;
    if (m.kind() == ManifoldKind::Torus2) {
      x = Vec2(-kPi + 2 * kPi * a, -kPi + 2 * kPi * b);
      lap = d1(x, 0) + d1(x, 1);
    } else {
      x = Vec2(2 * kPi * a, 0.3 + (kPi - 0.6) * b);
      const double s = std::sin(x[1]);
      lap = d1(x, 1) + std::cos(x[1]) / s * mode.gradient(x)[1] + d1(x, 0) / (s * s);
    }
    const cplx u = mode.value(x);
    r2 += std::norm(-lap - mode.lambda * mode.lambda * u);
    u2 += std::norm(u);
  }
  return std::sqrt(r2 / u2);
}

}  // namespace lab
