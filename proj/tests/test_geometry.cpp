#include "lab/errors.hpp"
#include "lab/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace lab;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const LabError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a LabError";
  return ErrorCode::IoError;
}

}  // namespace

TEST(BuildManifold, TorusDescriptor) {
  auto setup = build_manifold({{"kind", "torus2"}, {"sigma", "x0"}});
  EXPECT_EQ(setup.manifold.kind(), ManifoldKind::Torus2);
  EXPECT_FALSE(setup.manifold.has_boundary());
  ASSERT_EQ(setup.sigma.components.size(), 1u);
  EXPECT_EQ(setup.sigma.components[0].kind, SigmaKind::TorusCircleX0);
}

TEST(BuildManifold, DefaultRevolutionMeetsPointConstraints) {
  auto setup = build_manifold({{"kind", "revolution"}, {"profile", {{"constraints", "paper-default"}}}});
  const auto& p = setup.manifold.profile();
  EXPECT_NEAR(p.R(0), 1.0, 1e-12);
  EXPECT_NEAR(p.R(kPi / 2), std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(p.R(kPi), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(setup.manifold.has_boundary());
}

TEST(BuildManifold, DefaultCoefficientsMatchHandSolve) {
  // a0 + a1 + a2 = 1, a0 - a2 = sqrt5, a0 - a1 + a2 = 1/sqrt2
  const double s = 1 / std::sqrt(2.0);
  const double a1 = (1 - s) / 2;
  const double sum02 = (1 + s) / 2;
  const double a0 = (sum02 + std::sqrt(5.0)) / 2;
  const double a2 = (sum02 - std::sqrt(5.0)) / 2;
  const auto c = RevolutionProfile::paper_default().cos_coeffs();
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0], a0, 1e-14);
  EXPECT_NEAR(c[1], a1, 1e-14);
  EXPECT_NEAR(c[2], a2, 1e-14);
}

TEST(BuildManifold, NegativeEndpointRejected) {
  nlohmann::json d = {{"kind", "revolution"},
                      {"profile", {{"constraints", {{"R0", 1.0}, {"R_half", std::sqrt(5.0)}, {"R_pi", -1.0}}}}}};
  EXPECT_EQ(code_of([&] { build_manifold(d); }), ErrorCode::NonPositiveProfile);
}

TEST(BuildManifold, ShortSeriesCannotMeetConstraints) {
  EXPECT_EQ(code_of([] { RevolutionProfile::from_point_constraints(1, std::sqrt(5.0), 1 / std::sqrt(2.0), 2); }),
            ErrorCode::ProfileConstraintViolation);
}

TEST(BuildManifold, ErrorsOnBadDescriptors) {
  EXPECT_EQ(code_of([] { build_manifold({{"kind", "klein"}}); }), ErrorCode::UnsupportedKind);
  EXPECT_EQ(code_of([] { build_manifold({{"kind", "sphere2"}, {"sigma", "x0"}}); }), ErrorCode::UnsupportedPair);
  EXPECT_EQ(code_of([] { build_manifold({{"kind", "torus2"}, {"colour", 1}}); }), ErrorCode::ConfigError);
}

TEST(BuildManifold, UnionSigma) {
  auto setup = build_manifold({{"kind", "torus2"}, {"sigma", {"x0", "y0"}}});
  EXPECT_EQ(setup.sigma.components.size(), 2u);
  EXPECT_EQ(setup.sigma.name(), "x0+y0");
}

TEST(MetricNorm, Examples) {
  EXPECT_DOUBLE_EQ(metric_norm(ManifoldModel::torus(), {0.3, -1}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(metric_norm(ManifoldModel::sphere(), {0.7, kPi / 2}, {1, 0}), 1.0);
  auto rev = ManifoldModel::revolution(RevolutionProfile::paper_default());
  for (double z : {-2.0, 0.0, 0.4, 1.5, 3.0})
    EXPECT_NEAR(metric_norm(rev, {z, 0.2}, {0, 1}), 1 / rev.profile().R(z), 1e-15);
}

TEST(MetricNorm, OutOfChart) {
  EXPECT_EQ(code_of([] { metric_norm(ManifoldModel::sphere(), {0, 0}, {1, 0}); }), ErrorCode::OutOfChart);
  auto rev = ManifoldModel::revolution(RevolutionProfile::paper_default());
  EXPECT_EQ(code_of([&] { metric_norm(rev, {4.0, 0}, {1, 0}); }), ErrorCode::OutOfChart);
}

TEST(MetricNorm, SymmetricPositiveForm) {
  auto rev = ManifoldModel::revolution(RevolutionProfile::paper_default());
  for (double z : {-3.0, -1.0, 0.5, 2.0}) {
    Vec2 a(0.3, -1.2), b(-0.7, 0.4);
    // polarization gives the bilinear form; it must be symmetric and positive
    auto q = [&](const Vec2& v) { return std::pow(metric_norm(rev, {z, 0}, v), 2); };
    double ab = 0.25 * (q(a + b) - q(a - b));
    double ba = 0.25 * (q(b + a) - q(b - a));
    EXPECT_NEAR(ab, ba, 1e-14);
    EXPECT_GT(q(a), 0);
  }
}

TEST(ProfileEval, PointValues) {
  auto p = RevolutionProfile::paper_default();
  auto v0 = profile_eval(p, 0);
  EXPECT_NEAR(v0.R, 1, 1e-12);
  EXPECT_EQ(v0.dR, 0.0);
  EXPECT_NEAR(v0.V, 1, 1e-12);
  EXPECT_NEAR(profile_eval(p, kPi / 2).V, 0.2, 1e-12);
  EXPECT_NEAR(profile_eval(p, kPi).V, 2, 1e-12);
}

TEST(ProfileEval, PotentialMatchesFiniteDifferences) {
  auto p = RevolutionProfile::paper_default();
  const double h = 1e-4;
  for (double z : {-2.5, -0.3, 0.8, 2.2}) {
    const double r = p.R(z);
    const double d1 = (p.R(z + h) - p.R(z - h)) / (2 * h);
    const double d2 = (p.R(z + h) - 2 * r + p.R(z - h)) / (h * h);
    const double v1 = -0.25 * d1 * d1 / (r * r) + 0.5 * d2 / (r * r);
    auto v = profile_eval(p, z);
    EXPECT_NEAR(v.dR, d1, 1e-7);
    EXPECT_NEAR(v.d2R, d2, 1e-5);
    EXPECT_NEAR(v.V1, v1, 1e-5);
    EXPECT_DOUBLE_EQ(v.V, 1 / (r * r));
  }
}

TEST(ProfileEval, ConjugatedPotential) {
  // R^{1/2} Delta_g R^{-1/2} f = f'' - V1_conj f on theta-independent f
  auto p = RevolutionProfile::paper_default();
  auto f = [](double z) { return std::sin(1.3 * z) + 0.2 * z * z; };
  auto u = [&](double z) { return f(z) / std::sqrt(p.R(z)); };
  const double h = 1e-3;
  for (double z : {-2.0, -0.5, 0.7, 1.9}) {
    const double lap = (p.R(z + h / 2) * (u(z + h) - u(z)) / h - p.R(z - h / 2) * (u(z) - u(z - h)) / h) / h / p.R(z);
    const double lhs = std::sqrt(p.R(z)) * lap;
    const double fpp = (f(z + h) - 2 * f(z) + f(z - h)) / (h * h);
    EXPECT_NEAR(lhs, fpp - profile_eval(p, z).V1_conj * f(z), 1e-5);
  }
}

TEST(ProfileEval, ExactlyEven) {
  auto p = RevolutionProfile::paper_default();
  for (int i = 0; i <= 1000; ++i) {
    double z = kPi * i / 1000;
    EXPECT_EQ(p.R(z), p.R(-z));
  }
}

TEST(ProfileEval, MinimumOfPotential) {
  auto p = RevolutionProfile::paper_default();
  double best = INFINITY;
  for (int i = 0; i <= 200000; ++i) best = std::min(best, p.eval(kPi * i / 200000).V);
  EXPECT_NEAR(p.min_V(), best, 1e-9);
  EXPECT_LE(p.min_V(), best);
}

TEST(FermiChart, TorusX0Branch) {
  auto m = ManifoldModel::torus();
  auto chart = fermi_chart(m, Hypersurface::single(SigmaKind::TorusCircleX0));
  EXPECT_DOUBLE_EQ(chart.x1({0.5, 2.0}), 0.5);
  EXPECT_NEAR(chart.x1({2 * kPi - 0.25, 0}), -0.25, 1e-15);
  EXPECT_NEAR(chart.x1({-3.0, 0}), -3.0, 1e-15);
  EXPECT_DOUBLE_EQ(chart.xi1({0, 1}, {0.6, 0.8}), 0.6);
}

TEST(FermiChart, SphereEquator) {
  auto m = ManifoldModel::sphere();
  auto chart = fermi_chart(m, Hypersurface::single(SigmaKind::SphereEquator));
  for (double phi : {0.3, 1.2, kPi / 2, 2.9}) EXPECT_DOUBLE_EQ(chart.x1({1.0, phi}), kPi / 2 - phi);
  EXPECT_DOUBLE_EQ(chart.r0(0.4, 3.0), 9.0);
  EXPECT_DOUBLE_EQ(chart.xi1({0, kPi / 2}, {0.0, -1.0}), 1.0);
}

TEST(FermiChart, RevolutionWaist) {
  auto m = ManifoldModel::revolution(RevolutionProfile::paper_default());
  auto chart = fermi_chart(m, Hypersurface::single(SigmaKind::RevolutionWaist));
  EXPECT_NEAR(chart.r0(1.0, 2.0), 4.0, 1e-12);
  EXPECT_NEAR(chart.arc_length(), 2 * kPi, 1e-12);
}

TEST(FermiChart, UnitSpeedAlongNormal) {
  for (auto [m, kind] : {std::pair{ManifoldModel::torus(), SigmaKind::TorusCircleX0},
                         std::pair{ManifoldModel::torus(), SigmaKind::TorusCircleY0},
                         std::pair{ManifoldModel::sphere(), SigmaKind::SphereEquator},
                         std::pair{ManifoldModel::revolution(RevolutionProfile::paper_default()),
                                   SigmaKind::RevolutionWaist}}) {
    for (int co : {1, -1}) {
      FermiChart chart(m, {kind, co});
      for (double s : {0.1, 1.7, 4.0}) {
        const Vec2 p = chart.point(s);
        EXPECT_NEAR(chart.x1(p), 0.0, 1e-15);
        const Vec2 n = chart.normal(p);
        EXPECT_NEAR(metric_norm(m, p, flat(m, p, n)), 1.0, 1e-14);
        const double h = 1e-6;
        const double d = (chart.x1(p + h * n) - chart.x1(p - h * n)) / (2 * h);
        EXPECT_NEAR(d, 1.0, 1e-6);
        EXPECT_NEAR(metric_norm(m, p, flat(m, p, chart.tangent(p))), 1.0, 1e-14);
      }
      auto [lo, hi] = chart.cometric_bounds();
      EXPECT_GT(lo, 0);
      EXPECT_TRUE(std::isfinite(hi));
    }
  }
}

TEST(FermiChart, UnionNeedsPerComponentCharts) {
  auto m = ManifoldModel::torus();
  auto u = Hypersurface::union_of({SigmaKind::TorusCircleX0, SigmaKind::TorusCircleY0});
  EXPECT_EQ(code_of([&] { fermi_chart(m, u); }), ErrorCode::UnsupportedPair);
  EXPECT_EQ(fermi_charts(m, u).size(), 2u);
  EXPECT_EQ(code_of([&] { fermi_chart(ManifoldModel::sphere(), Hypersurface::single(SigmaKind::TorusCircleX0)); }),
            ErrorCode::UnsupportedPair);
}

TEST(SigmaQuadrature, EquatorWeights) {
  auto q = sigma_quadrature(ManifoldModel::sphere(), Hypersurface::single(SigmaKind::SphereEquator), 8);
  ASSERT_EQ(q.weights.size(), 8u);
  for (double w : q.weights) EXPECT_DOUBLE_EQ(w, kPi / 4);
  EXPECT_NEAR(q.total_length(), 2 * kPi, 1e-15);
}

TEST(SigmaQuadrature, TrigonometricExactness) {
  const int n = 24;
  auto q = sigma_quadrature(ManifoldModel::torus(), Hypersurface::single(SigmaKind::TorusCircleX0), n);
  EXPECT_NEAR(q.total_length(), 2 * kPi, 1e-12);
  for (int k = -(n - 1); k < n; ++k) {
    std::complex<double> sum = 0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
      sum += q.weights[i] * std::exp(std::complex<double>(0, k * q.nodes[i].point[1]));
    const double exact = k == 0 ? 2 * kPi : 0.0;
    EXPECT_LT(std::abs(sum - exact), 1e-12) << "k = " << k;
  }
}

TEST(SigmaQuadrature, WaistAndUnion) {
  auto rev = ManifoldModel::revolution(RevolutionProfile::paper_default());
  auto q = sigma_quadrature(rev, Hypersurface::single(SigmaKind::RevolutionWaist), 16);
  EXPECT_NEAR(q.total_length(), 2 * kPi, 1e-10);
  auto u = sigma_quadrature(ManifoldModel::torus(),
                            Hypersurface::union_of({SigmaKind::TorusCircleX0, SigmaKind::TorusCircleY0}), 16);
  EXPECT_EQ(u.nodes.size(), 32u);
  EXPECT_NEAR(u.total_length(), 4 * kPi, 1e-12);
  EXPECT_EQ(u.nodes[20].component, 1);
}

TEST(SigmaQuadrature, TooFewNodes) {
  EXPECT_EQ(code_of([] {
              sigma_quadrature(ManifoldModel::torus(), Hypersurface::single(SigmaKind::TorusCircleX0), 3);
            }),
            ErrorCode::TooFewNodes);
}
