#include "lab/errors.hpp"
#include "lab/numeric.hpp"
#include "lab/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
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
  return ErrorCode::CheckFailure;
}

double max_offdiag_identity_error(const Eigen::MatrixXcd& g) {
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

const RevolutionProfile& profile() {
  static const RevolutionProfile p = RevolutionProfile::paper_default();
  return p;
}

}  // namespace

TEST(TorusModes, ZeroCutoffIsConstant) {
  auto modes = torus_modes(0);
  ASSERT_EQ(modes.size(), 1u);
  EXPECT_EQ(modes[0].lambda, 0);
  EXPECT_NEAR(std::abs(modes[0].value({0.3, -1.2}) - 1 / (2 * kPi)), 0, 1e-16);
}

TEST(TorusModes, LatticeCount) {
  int brute = 0;
  for (int m = -10; m <= 10; ++m)
    for (int n = -10; n <= 10; ++n) brute += m * m + n * n <= 100;
  EXPECT_EQ(brute, 317);
  EXPECT_EQ(torus_modes(10).size(), 317u);
  EXPECT_EQ(torus_real_modes(10).size(), 317u);
  EXPECT_EQ(torus_mode_count(10), 317u);
}

TEST(TorusModes, TooMany) {
  EXPECT_EQ(code_of([] { torus_modes(1000); }), ErrorCode::CutoffTooLargeForMemory);
}

TEST(TorusModes, SortedByFrequency) {
  auto modes = torus_modes(6);
  for (std::size_t i = 1; i < modes.size(); ++i) EXPECT_LE(modes[i - 1].lambda, modes[i].lambda);
}

TEST(TorusModes, TraceOfThreeFour) {
  auto mode = torus_mode(3, 4);
  EXPECT_DOUBLE_EQ(mode.lambda, 5);
  auto m = ManifoldModel::torus();
  FermiChart chart(m, {SigmaKind::TorusCircleX0, 1});
  for (double y : {-2.0, 0.1, 1.7}) {
    const cplx e = std::polar(1.0, 4 * y) / (2 * kPi);
    EXPECT_NEAR(std::abs(mode.value({0, y}) - e), 0, 1e-15);
    EXPECT_NEAR(std::abs(mode.normal_derivative(chart, {0, y}) - cplx(0, 3) * e), 0, 1e-15);
  }
}

TEST(TorusModes, Orthonormal) {
  auto m = ManifoldModel::torus();
  auto real = torus_real_modes(4);
  ASSERT_LE(real.size(), 50u);
  EXPECT_LT(max_offdiag_identity_error(area_gram(real, m, 32, 32)), 1e-8);
  auto cx = torus_modes(4);
  EXPECT_LT(max_offdiag_identity_error(area_gram(cx, m, 32, 32)), 1e-8);
}

TEST(TorusModes, EigenResidual) {
  auto m = ManifoldModel::torus();
  for (const auto& mode : torus_real_modes(7)) EXPECT_LT(mode_residual(mode, m), 1e-8) << mode.label.str();
  EXPECT_LT(mode_residual(torus_mode(1, 5, TorusFactor::Sin, TorusFactor::Exp), m), 1e-8);
}

TEST(TorusModes, BadFactor) {
  EXPECT_EQ(code_of([] { torus_mode(0, 1, TorusFactor::Sin, TorusFactor::Cos); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { torus_mode(-1, 1, TorusFactor::Cos, TorusFactor::Cos); }), ErrorCode::IndexOutOfRange);
}

TEST(SphereModes, DegreeOne) {
  auto y = sphere_mode(1, 0);
  EXPECT_DOUBLE_EQ(y.lambda, std::sqrt(2.0));
  for (double phi : {0.2, 1.0, 2.5})
    EXPECT_NEAR(y.value({0.7, phi}).real(), std::sqrt(3 / (4 * kPi)) * std::cos(phi), 1e-15);
}

TEST(SphereModes, EquatorTraceVanishesExactly) {
  for (int l = 1; l <= 200; ++l) {
    auto y = sphere_mode(l, l - 1);
    EXPECT_EQ(y.value({0.3, kPi / 2}), cplx(0, 0)) << l;
  }
}

TEST(SphereModes, HighDegreeNorm) {
  auto m = ManifoldModel::sphere();
  auto g = area_gram({sphere_mode(40, 39)}, m, 96, 16);
  EXPECT_NEAR(g(0, 0).real(), 1, 1e-8);
}

TEST(SphereModes, Orthonormal) {
  auto m = ManifoldModel::sphere();
  auto modes = sphere_real_modes(6);
  ASSERT_EQ(modes.size(), 49u);
  EXPECT_LT(max_offdiag_identity_error(area_gram(modes, m, 16, 32)), 1e-8);
}

TEST(SphereModes, EigenResidual) {
  auto m = ManifoldModel::sphere();
  for (int l = 0; l <= 8; ++l)
    for (int mm = -l; mm <= l; mm += std::max(1, l / 2)) EXPECT_LT(mode_residual(sphere_real_mode(l, mm), m), 1e-8);
  EXPECT_LT(mode_residual(sphere_mode(12, 11), m), 1e-8);
}

TEST(SphereModes, DerivativeMatchesDifferences) {
  for (auto [l, mm] : {std::pair{3, 1}, {10, 9}, {25, 4}, {60, 0}}) {
    for (double phi : {0.4, 1.3, 2.2}) {
      const double h = 1e-5;
      const double fd = (normalized_legendre(l, mm, phi + h).p - normalized_legendre(l, mm, phi - h).p) / (2 * h);
      EXPECT_NEAR(normalized_legendre(l, mm, phi).dp_dphi, fd, 1e-6 * (1 + std::abs(fd)));
    }
  }
}

TEST(SphereModes, OutOfRange) {
  EXPECT_EQ(code_of([] { sphere_mode(3, 4); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { sphere_mode(501, 0); }), ErrorCode::IndexOutOfRange);
}

TEST(SphereEquator, DegreeTwoAmplitude) {
  EXPECT_NEAR(sphere_equator_cauchy(2).amplitude, 3 * std::sqrt(5 / (24 * kPi)), 1e-14);
  EXPECT_NEAR(sphere_equator_cauchy(2).amplitude, 0.7725, 1e-4);
}

TEST(SphereEquator, ChainMatchesRecurrence) {
  for (int l = 2; l <= 300; l += 7) {
    const double a = sphere_equator_cauchy(l).amplitude;
    EXPECT_NEAR(sphere_equator_amplitude_recurrence(l) / a, 1, 1e-10) << l;
  }
}

TEST(SphereEquator, CauchyDataOfColumn) {
  auto m = ManifoldModel::sphere();
  auto sigma = Hypersurface::single(SigmaKind::SphereEquator);
  auto quad = sigma_quadrature(m, sigma, 256);
  for (int l : {2, 17, 90}) {
    auto c = cauchy_data(sphere_mode(l, l - 1), m, sigma, quad);
    EXPECT_EQ(c.trace_norm, 0);
    const auto ref = sphere_equator_cauchy(l);
    EXPECT_NEAR(c.normal_norm / (ref.amplitude * std::sqrt(2 * kPi)), 1, 1e-10);
  }
}

TEST(SphereEquator, Rates) {
  std::vector<double> x, ya, yr;
  for (int l = 20; l <= 200; ++l) {
    auto c = sphere_equator_cauchy(l);
    x.push_back(std::log(l));
    ya.push_back(std::log(c.amplitude));
    yr.push_back(std::log(c.scaled_ratio));
  }
  EXPECT_NEAR(linear_fit(x, ya).slope, 0.75, 0.02);
  EXPECT_NEAR(linear_fit(x, yr).slope, -0.25, 0.02);
}

TEST(GammaChain, SmallCases) {
  auto g1 = gamma_chain_check(1);
  EXPECT_LT(g1.reflection_residual, 1e-14);
  EXPECT_LT(g1.product_residual, 1e-14);
  // Gamma(-5/2) = -8 sqrt(pi)/15
  EXPECT_NEAR(std::tgamma(-2.5), -8 * std::sqrt(kPi) / 15, 1e-14);
  EXPECT_NEAR(8 * -std::sqrt(kPi) / std::tgamma(-2.5), 15, 1e-12);
  EXPECT_LT(gamma_chain_check(3).product_residual, 1e-14);
}

TEST(GammaChain, IdentitiesAndStabilization) {
  for (int l = 1; l <= 300; ++l) {
    auto g = gamma_chain_check(l);
    EXPECT_LE(g.reflection_residual, 1e-10) << l;
    EXPECT_LE(g.product_residual, 1e-10) << l;
  }
  EXPECT_NEAR(gamma_chain_check(200).ratio / gamma_chain_check(100).ratio, 1, 0.01);
  EXPECT_EQ(code_of([] { gamma_chain_check(301); }), ErrorCode::IndexOutOfRange);
}

TEST(Radial, WindowOnset) {
  const int k0 = window_onset(profile(), 2, 40, 0.2, 0.5, 1000);
  EXPECT_GE(k0, 2);
  EXPECT_LE(k0, 20);
}

TEST(Radial, EigenvaluesIncreasingAndOrthogonal) {
  for (RadialBc bc : {RadialBc::Neumann, RadialBc::Dirichlet}) {
    auto prob = radial_eigensolve(profile(), 60, bc, 2000);
    ASSERT_GE(prob.pairs.size(), 3u);
    for (std::size_t i = 1; i < prob.pairs.size(); ++i) EXPECT_LT(prob.pairs[i - 1].E, prob.pairs[i].E);
    for (std::size_t a = 0; a < prob.pairs.size(); ++a)
      for (std::size_t b = 0; b < prob.pairs.size(); ++b) {
        // trapezoid on (0, pi) with psi(pi) = 0
        double s = 0.5 * prob.pairs[a].psi[0] * prob.pairs[b].psi[0];
        for (int i = 1; i < prob.grid_n; ++i) s += prob.pairs[a].psi[i] * prob.pairs[b].psi[i];
        s *= prob.dz;
        EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-8);
      }
    EXPECT_EQ(prob.pairs[0].psi[prob.grid_n], 0);
    if (bc == RadialBc::Dirichlet) EXPECT_EQ(prob.pairs[0].psi[0], 0);
  }
}

TEST(Radial, SecondOrderConvergence) {
  auto lowest = [](int n) { return radial_eigensolve(profile(), 20, RadialBc::Neumann, n, 0.0, 0.5).pairs.at(0).E; };
  const double e1 = lowest(400), e2 = lowest(800), e4 = lowest(1600);
  EXPECT_NEAR(std::log2((e1 - e2) / (e2 - e4)), 2.0, 0.2);
}

TEST(Radial, ContinuumResidualOrderTwo) {
  auto res = [](int n) {
    auto prob = radial_eigensolve(profile(), 30, RadialBc::Dirichlet, n, 0.0, 0.5);
    return radial_continuum_residual(prob, 0);
  };
  EXPECT_NEAR(std::log2(res(500) / res(1000)), 2.0, 0.2);
}

TEST(Radial, EmptyWindowIsNotAnError) {
  auto prob = radial_eigensolve(profile(), 30, RadialBc::Neumann, 1000, 0.0, 0.1);
  EXPECT_TRUE(prob.pairs.empty());
}

TEST(Radial, BadInputs) {
  EXPECT_EQ(code_of([] { radial_eigensolve(profile(), 1, RadialBc::Neumann); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { radial_eigensolve(profile(), 10, RadialBc::Neumann, 100); }), ErrorCode::ConfigError);
}

TEST(Weyl, MatchesPhaseSpace) {
  auto w = weyl_count(profile(), 1.0 / 40, 0.2, 0.5);
  ASSERT_GT(w.prediction, 0);
  EXPECT_LE(std::abs(w.count / w.prediction - 1), 0.2);
}

TEST(Weyl, BelowPotentialIsEmpty) {
  auto w = weyl_count(profile(), 1.0 / 40, 0.05, 0.15);
  EXPECT_EQ(w.count, 0);
  EXPECT_EQ(w.prediction, 0);
}

TEST(Weyl, PredictionScalesWithInverseH) {
  EXPECT_NEAR(weyl_prediction(profile(), 1.0 / 80, 0.2, 0.5) / weyl_prediction(profile(), 1.0 / 40, 0.2, 0.5), 2, 0.01);
}

TEST(Involution, OddTraceAndEvenNormalVanish) {
  auto m = ManifoldModel::revolution(profile());
  auto sigma = Hypersurface::single(SigmaKind::RevolutionWaist);
  auto quad = sigma_quadrature(m, sigma, 64);
  auto odd = extend_by_involution(radial_eigensolve(profile(), 40, RadialBc::Dirichlet, 2000), 0, "o");
  auto even = extend_by_involution(radial_eigensolve(profile(), 40, RadialBc::Neumann, 2000), 0, "e");
  auto co = cauchy_data(odd, m, sigma, quad);
  auto ce = cauchy_data(even, m, sigma, quad);
  EXPECT_EQ(co.trace_norm, 0);
  EXPECT_GT(co.normal_norm, 0);
  EXPECT_EQ(ce.normal_norm, 0);
  EXPECT_GT(ce.trace_norm, 0);
}

TEST(Involution, ParityIsExact) {
  auto odd = extend_by_involution(radial_eigensolve(profile(), 25, RadialBc::Dirichlet, 1000), 0);
  auto even = extend_by_involution(radial_eigensolve(profile(), 25, RadialBc::Neumann, 1000), 0);
  for (double z : {0.013, 0.4, 1.234567, 2.9, kPi}) {
    for (double th : {0.0, 1.1}) {
      EXPECT_EQ(odd.value({-z, th}), -odd.value({z, th}));
      EXPECT_EQ(even.value({-z, th}), even.value({z, th}));
    }
  }
}

TEST(Involution, ParityMismatch) {
  auto prob = radial_eigensolve(profile(), 25, RadialBc::Dirichlet, 1000);
  EXPECT_EQ(code_of([&] { extend_by_involution(prob, 0, "e"); }), ErrorCode::ParityMismatch);
  EXPECT_EQ(code_of([&] { extend_by_involution(prob, 99, "o"); }), ErrorCode::IndexOutOfRange);
}

TEST(Involution, ExtendedResidualAndNorm) {
  auto m = ManifoldModel::revolution(profile());
  for (RadialBc bc : {RadialBc::Neumann, RadialBc::Dirichlet}) {
    auto prob = radial_eigensolve(profile(), 30, bc, 1000);
    for (std::size_t i = 0; i < prob.pairs.size(); ++i) {
      const double half = radial_discrete_residual(prob, i);
      const double full = radial_extended_residual(prob, i);
      EXPECT_LE(full, 5 * half + 1e-13);
    }
    auto mode = extend_by_involution(prob, 0);
    EXPECT_NEAR(mode.lambda, 30 * std::sqrt(prob.pairs[0].E), 1e-12);
    EXPECT_NEAR(area_gram({mode}, m, 0, 8)(0, 0).real(), 1, 1e-8);
  }
}

TEST(Involution, ModesOfBothParitiesAreOrthogonal) {
  auto m = ManifoldModel::revolution(profile());
  auto a = extend_by_involution(radial_eigensolve(profile(), 30, RadialBc::Neumann, 1000), 0);
  auto b = extend_by_involution(radial_eigensolve(profile(), 30, RadialBc::Dirichlet, 1000), 0);
  auto g = area_gram({a, b}, m, 0, 8);
  EXPECT_LT(std::abs(g(0, 1)), 1e-12);
}

TEST(Agmon, RateMatchesPrediction) {
  std::vector<int> ks;
  for (int k = 40; k <= 160; k += 10) ks.push_back(k);
  auto fit = agmon_rate_fit(profile(), ks, 0.05);
  EXPECT_GT(fit.c_fit, 0);
  EXPECT_LE(std::abs(fit.c_fit - fit.prediction) / fit.prediction, 0.15);
  auto wide = agmon_rate_fit(profile(), ks, 0.1);
  EXPECT_LT(wide.c_fit, fit.c_fit);
}

TEST(Agmon, NeedsFourPoints) {
  EXPECT_EQ(code_of([] { agmon_rate_fit(profile(), {40, 50, 60}, 0.05); }), ErrorCode::InsufficientPoints);
}

TEST(Agmon, DistanceByQuadrature) {
  // Brute-force midpoint rule against the substituted Gauss rule.
  const double E = 0.5;
  const double ze = turning_point(profile(), E);
  EXPECT_NEAR(1 / std::pow(profile().R(ze), 2), E, 1e-12);
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double z = (i + 0.5) * ze / n;
    s += std::sqrt(std::max(1 / std::pow(profile().R(z), 2) - E, 0.0)) * ze / n;
  }
  EXPECT_NEAR(agmon_distance(profile(), E), s, 1e-6);
}

TEST(Cauchy, ConstantTorusMode) {
  auto m = ManifoldModel::torus();
  auto sigma = Hypersurface::single(SigmaKind::TorusCircleX0);
  auto c = cauchy_data(torus_mode(0, 0), m, sigma, sigma_quadrature(m, sigma, 32));
  EXPECT_NEAR(c.trace_norm, 1 / std::sqrt(2 * kPi), 1e-15);
  EXPECT_EQ(c.normal_norm, 0);
}

TEST(Cauchy, SineFamilyOnCircle) {
  auto m = ManifoldModel::torus();
  auto sigma = Hypersurface::single(SigmaKind::TorusCircleX0);
  auto mode = torus_mode(1, 5, TorusFactor::Sin, TorusFactor::Exp);
  auto c = cauchy_data(mode, m, sigma, sigma_quadrature(m, sigma, 32));
  EXPECT_EQ(c.trace_norm, 0);
  EXPECT_NEAR(c.normal_norm, 1 / std::sqrt(kPi), 1e-14);
  EXPECT_NEAR(c.scaled_normal_norm, 1 / std::sqrt(kPi * 27), 1e-14);
}

TEST(Cauchy, ManifoldMismatch) {
  auto m = ManifoldModel::sphere();
  auto sigma = Hypersurface::single(SigmaKind::SphereEquator);
  auto quad = sigma_quadrature(m, sigma, 16);
  EXPECT_EQ(code_of([&] { cauchy_data(torus_mode(1, 1), m, sigma, quad); }), ErrorCode::ManifoldMismatch);
  auto other = RevolutionProfile({1.5, -0.2});
  auto mode = extend_by_involution(radial_eigensolve(other, 10, RadialBc::Neumann, 400, 0.0, 2.0), 0);
  auto rm = ManifoldModel::revolution(profile());
  auto rs = Hypersurface::single(SigmaKind::RevolutionWaist);
  EXPECT_EQ(code_of([&] { cauchy_data(mode, rm, rs, sigma_quadrature(rm, rs, 16)); }), ErrorCode::ManifoldMismatch);
}

TEST(Sweep, TorusUnionFloor) {
  auto m = ManifoldModel::torus();
  auto sigma = Hypersurface::union_of({SigmaKind::TorusCircleX0, SigmaKind::TorusCircleY0});
  auto quad = sigma_quadrature(m, sigma, 64);
  auto table = lower_bound_sweep(torus_modes(20), m, sigma, quad, BoundKind::UniqueControl);
  ASSERT_FALSE(table.rows.empty());
  for (const auto& r : table.rows) EXPECT_GE(r.min_q, 0.4 / kPi) << r.lambda;
  for (std::size_t i = 1; i < table.rows.size(); ++i) EXPECT_LT(table.rows[i - 1].lambda, table.rows[i].lambda);
}

TEST(Sweep, DegenerateSpacesHandledJointly) {
  // On {x = 0} alone the eigenspace of (1, n) contains sin(x)e^{iny}, whose trace vanishes.
  auto m = ManifoldModel::torus();
  auto sigma = Hypersurface::single(SigmaKind::TorusCircleX0);
  auto quad = sigma_quadrature(m, sigma, 64);
  auto table = lower_bound_sweep(torus_modes(5.1), m, sigma, quad, BoundKind::Unique);
  const auto& last = table.rows.back();
  EXPECT_NEAR(last.lambda, std::sqrt(26.0), 1e-12);
  EXPECT_EQ(last.dim, 8);
  EXPECT_NEAR(last.min_q, 1 / (kPi * 27), 1e-12);
}

TEST(Sweep, SingleCircleFamilySlope) {
  auto m = ManifoldModel::torus();
  auto sigma = Hypersurface::single(SigmaKind::TorusCircleX0);
  auto quad = sigma_quadrature(m, sigma, 128);
  std::vector<double> x, y;
  for (int n = 1; n <= 50; ++n) {
    auto mode = torus_mode(1, n, TorusFactor::Sin, TorusFactor::Exp);
    auto c = cauchy_data(mode, m, sigma, quad);
    x.push_back(std::log(japanese(mode.lambda)));
    y.push_back(std::log(std::pow(c.trace_norm + c.scaled_normal_norm, 2)));
  }
  EXPECT_NEAR(linear_fit(x, y).slope, -2, 0.1);
}

TEST(Sweep, EmptyInput) {
  auto m = ManifoldModel::torus();
  auto sigma = Hypersurface::single(SigmaKind::TorusCircleX0);
  EXPECT_EQ(code_of([&] { lower_bound_sweep({}, m, sigma, sigma_quadrature(m, sigma, 8), BoundKind::GenLow); }),
            ErrorCode::EmptyInput);
}

TEST(Sweep, PositiveCombinedData) {
  // Unique continuation: no exact eigenfunction has vanishing Cauchy data.
  auto t = ManifoldModel::torus();
  auto ts = Hypersurface::single(SigmaKind::TorusCircleY0);
  auto tq = sigma_quadrature(t, ts, 64);
  for (const auto& mode : torus_real_modes(8)) EXPECT_GT(cauchy_data(mode, t, ts, tq).combined, 0);
  auto s = ManifoldModel::sphere();
  auto ss = Hypersurface::single(SigmaKind::SphereEquator);
  auto sq = sigma_quadrature(s, ss, 64);
  for (const auto& mode : sphere_real_modes(8)) EXPECT_GT(cauchy_data(mode, s, ss, sq).combined, 0);
}
