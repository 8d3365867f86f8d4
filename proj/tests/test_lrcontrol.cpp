#include "lab/errors.hpp"
#include "lab/lrcontrol.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
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

const SpectralModel& union_model(int cutoff) {
  static std::map<int, SpectralModel> cache;
  auto it = cache.find(cutoff);
  if (it == cache.end())
    it = cache
             .emplace(cutoff, make_spectral_model(ManifoldModel::torus(),
                                                  Hypersurface::union_of({SigmaKind::TorusCircleX0,
                                                                          SigmaKind::TorusCircleY0}),
                                                  cutoff))
             .first;
  return it->second;
}

const SpectralModel& x0_model(int cutoff) {
  static std::map<int, SpectralModel> cache;
  auto it = cache.find(cutoff);
  if (it == cache.end())
    it = cache
             .emplace(cutoff, make_spectral_model(ManifoldModel::torus(), Hypersurface::single(SigmaKind::TorusCircleX0),
                                                  cutoff))
             .first;
  return it->second;
}

double log_factorial(int k) { return std::lgamma(k + 1.0); }

}  // namespace

// ---- spectral model ----

TEST(SpectralModel, UnionTorusSplitsIntoFourBlocks) {
  const SpectralModel& sm = union_model(8);
  EXPECT_EQ(sm.blocks.size(), 4u);
  EXPECT_EQ(sm.cauchy_gram.rows(), sm.size());
  EXPECT_LT((sm.cauchy_gram - sm.cauchy_gram.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SpectralModel, RevolutionIsUnsupported) {
  const ManifoldModel m = ManifoldModel::revolution(RevolutionProfile::paper_default());
  EXPECT_EQ(code_of([&] { make_spectral_model(m, Hypersurface::single(SigmaKind::RevolutionWaist), 4); }),
            ErrorCode::UnsupportedKind);
}

TEST(SpectralModel, RandomStateHasUnitNorm) {
  const SpectralModel& sm = union_model(8);
  EXPECT_NEAR(sm.hm1_norm(random_state(sm, 7)), 1.0, 1e-14);
  EXPECT_NEAR(sm.norm(random_state(sm, 7, 1), 1), 1.0, 1e-14);
}

// ---- heat and elliptic evolution ----

TEST(Heat, BasisVectorDecaysExactly) {
  const SpectralModel& sm = union_model(8);
  for (Eigen::Index j : {Eigen::Index(0), Eigen::Index(5), sm.size() - 1}) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(sm.size(), j);
    EXPECT_DOUBLE_EQ(heat_evolve(sm, e, 0.3).norm(), std::exp(-0.3 * sm.lambda2[j]));
  }
}

TEST(Heat, SemigroupLaw) {
  const SpectralModel& sm = union_model(8);
  const Eigen::VectorXd v = random_state(sm, 3);
  const Eigen::VectorXd a = heat_evolve(sm, v, 0.7);
  const Eigen::VectorXd b = heat_evolve(sm, heat_evolve(sm, v, 0.3), 0.4);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Heat, HighFrequencyDecayRate) {
  const SpectralModel& sm = union_model(8);
  const double lam = 3;
  const Eigen::Index dim = sm.truncation(lam);
  Eigen::VectorXd y = random_state(sm, 11);
  y.head(dim).setZero();
  for (double t : {0.01, 0.1, 0.5}) {
    const double lhs = sm.hm1_norm(heat_evolve(sm, y, t));
    EXPECT_LE(lhs, std::exp(-lam * lam * t) * sm.hm1_norm(y));
  }
  // Equality for the lowest mode above lam.
  const Eigen::VectorXd e = Eigen::VectorXd::Unit(sm.size(), dim);
  EXPECT_NEAR(heat_evolve(sm, e, 0.2).norm(), std::exp(-sm.lambda2[dim] * 0.2), 1e-16);
}

TEST(Heat, NegativeTimeRejected) {
  const SpectralModel& sm = union_model(4);
  EXPECT_EQ(code_of([&] { heat_evolve(sm, random_state(sm, 1), -1e-3); }), ErrorCode::NegativeTime);
}

TEST(Elliptic, ZeroFrequencyIsLinear) {
  const SpectralModel& sm = union_model(4);
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(sm.size()), v1 = v0;
  v1[0] = 1;
  EXPECT_DOUBLE_EQ(elliptic_evolve(sm, v0, v1, 2)[0], 2);
}

TEST(Elliptic, ZeroSRecoversData) {
  const SpectralModel& sm = union_model(4);
  const Eigen::VectorXd v0 = random_state(sm, 1), v1 = random_state(sm, 2);
  EXPECT_EQ(elliptic_evolve(sm, v0, v1, 0), v0);
  const double h = 1e-7;
  const Eigen::VectorXd ds = (elliptic_evolve(sm, v0, v1, h) - elliptic_evolve(sm, v0, v1, -h)) / (2 * h);
  EXPECT_LT((ds - v1).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Elliptic, FourthOrderResidual) {
  const SpectralModel& sm = union_model(4);
  const Eigen::VectorXd v0 = random_state(sm, 5, 0), v1 = random_state(sm, 6, 0);
  const double h = 1e-3;
  double worst = 0, scale = 0;
  for (double s = -0.9; s <= 0.9; s += 0.05) {
    Eigen::VectorXd v[5];
    for (int k = 0; k < 5; ++k) v[k] = elliptic_evolve(sm, v0, v1, s + (k - 2) * h);
    const Eigen::VectorXd d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h);
    // -d_s^2 v - A v = 0 with A = -lambda^2.
    const Eigen::VectorXd res = d2 - sm.lambda2.cwiseProduct(v[2]);
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
    scale = std::max(scale, d2.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst / scale, 1e-6);
}

TEST(Admissibility, ZeroModeAndBoundedRatio) {
  const SpectralModel& sm = union_model(50);
  const AdmissibilityTable tab = admissibility_check(sm, 1);
  ASSERT_FALSE(tab.rows.empty());
  EXPECT_EQ(tab.rows.front().lambda, 0);
  // Constant mode: two circles of length 2 pi, value 1 / (2 pi).
  EXPECT_NEAR(tab.rows.front().ratio, 1 / kPi, 1e-13);
  EXPECT_TRUE(std::isfinite(tab.max_ratio));
  EXPECT_LT(tab.max_ratio, 10);
  EXPECT_LT(tab.rows.back().ratio, tab.max_ratio);
}

// ---- g1 and transmutation kernel ----

TEST(G1, ValueAndSlopeAtMidpoint) {
  const double T = 1, alpha = 3.15;
  const auto d = g1_derivatives(T, alpha, T / 2, 3);
  EXPECT_NEAR(d[0], std::exp(-4 * alpha / T), 1e-18);
  EXPECT_NEAR(d[1], 0, 1e-18);
  EXPECT_NEAR(d[3], 0, 1e-14);
}

TEST(G1, ClosedFormsUpToSecondDerivative) {
  const double T = 1.3, alpha = 0.8;
  for (double t : {0.1, 0.4, 1.0}) {
    const double p1 = -alpha * (-1 / (t * t) + 1 / ((T - t) * (T - t)));
    const double p2 = -alpha * (2 / (t * t * t) + 2 / ((T - t) * (T - t) * (T - t)));
    const double g = std::exp(-alpha * (1 / t + 1 / (T - t)));
    const auto d = g1_derivatives(T, alpha, t, 2);
    EXPECT_NEAR(d[0], g, 1e-14 * g);
    EXPECT_NEAR(d[1], p1 * g, 1e-13 * std::abs(p1 * g));
    EXPECT_NEAR(d[2], (p2 + p1 * p1) * g, 1e-12 * std::abs((p2 + p1 * p1) * g));
  }
}

TEST(G1, DerivativeBoundUpToForty) {
  const TransmutationKernel K = TransmutationKernel::make(1, 1);
  for (int i = 1; i < 40; ++i) {
    const double t = K.T * i / 40;
    const double tau = std::min(t, K.T - t);
    const auto logs = g1_log_abs_derivatives(K.T, K.alpha, t, 40);
    for (int k = 0; k <= 40; ++k) {
      const double bound = log_factorial(k) - k * std::log(K.delta * tau) - K.alpha / ((1 + K.delta) * tau);
      EXPECT_LE(logs[k], bound + 1e-9) << "t=" << t << " k=" << k;
    }
  }
}

TEST(G1, DerivativeParityAboutMidpoint) {
  const double T = 1, alpha = 3.15;
  for (double t : {0.2, 0.35}) {
    const auto a = g1_derivatives(T, alpha, t, 12), b = g1_derivatives(T, alpha, T - t, 12);
    for (int k = 0; k <= 12; ++k) EXPECT_NEAR(b[k], (k % 2 ? -1 : 1) * a[k], 1e-12 * std::abs(a[k]) + 1e-300);
  }
}

TEST(G1, OutsideIntervalRejected) {
  EXPECT_EQ(code_of([] { g1_derivatives(1, 1, 0, 2); }), ErrorCode::OutOfInterval);
  EXPECT_EQ(code_of([] { g1_derivatives(1, 1, 1.5, 2); }), ErrorCode::OutOfInterval);
}

TEST(Kernel, VanishesAtZeroS) {
  const TransmutationKernel K = TransmutationKernel::make(1, 1);
  for (double t : {0.05, 0.5, 0.93}) EXPECT_EQ(transmutation_eval(K, t, 0).value, 0);
}

TEST(Kernel, SlopeAtZeroIsG1) {
  const TransmutationKernel K = TransmutationKernel::make(1, 1);
  for (double t : {0.2, 0.5, 0.7}) {
    const double h = 1e-5;
    const double ds = (transmutation_eval(K, t, h).value - transmutation_eval(K, t, -h).value) / (2 * h);
    EXPECT_NEAR(ds, g1_derivatives(K.T, K.alpha, t, 0)[0], 1e-8);
  }
}

TEST(Kernel, PointwiseBoundOnGrid) {
  const TransmutationKernel K = TransmutationKernel::make(1, 1);
  for (int i = 0; i < 50; ++i) {
    const double t = K.T * (i + 1) / 51;
    const double tau = std::min(t, K.T - t);
    for (int j = 0; j < 50; ++j) {
      const double s = -K.S + 2 * K.S * (j + 0.5) / 50;
      const double v = transmutation_eval(K, t, s).value;
      if (v == 0) continue;
      const double log_bound = std::log(std::abs(s)) + (s * s / K.delta - K.alpha / (1 + K.delta)) / tau;
      EXPECT_LE(std::log(std::abs(v)), log_bound + 1e-9);
    }
  }
}

TEST(Kernel, InvalidConfigRejected) {
  TransmutationKernel K = TransmutationKernel::make(1, 1);
  K.delta = 0;
  EXPECT_EQ(code_of([&] { K.validate(); }), ErrorCode::ConfigError);
  const TransmutationKernel ok = TransmutationKernel::make(1, 1);
  EXPECT_EQ(code_of([&] { transmutation_eval(ok, 1.0, 0.1); }), ErrorCode::OutOfInterval);
}

TEST(Kernel, VerifyReport) {
  const KernelReport r = kernel_verify(TransmutationKernel::make(1, 1), 64, 1e-3);
  EXPECT_LE(r.residual, 1e-5);
  EXPECT_NEAR(r.order, 4, 0.5);
  // k(T - t, .) solves the backward equation, so the kernel is not symmetric in t.
  EXPECT_GT(r.symmetry, 0.1);
  EXPECT_LE(r.odd, 1e-15);
  EXPECT_EQ(r.s0_max, 0);
  EXPECT_LE(r.ds0_error, 1e-8);
  EXPECT_LE(r.near_zero, 1e-300);
  EXPECT_LE(r.near_T, 1e-300);
  EXPECT_LE(r.bound_worst, 0);
  EXPECT_LE(r.deriv_bound_worst, 0);
}

// ---- Gramians ----

TEST(Gramian, ConstantModeOnSingleCircle) {
  const SpectralModel& sm = x0_model(0);
  ASSERT_EQ(sm.size(), 1);
  for (double T : {0.5, 2.0}) {
    const ObservabilityGramian g = observability_gramian(sm, 0, T);
    EXPECT_NEAR(g.G(0, 0), T / (2 * kPi), 1e-15);
  }
}

TEST(Gramian, SymmetricPositiveSemidefinite) {
  const SpectralModel& sm = union_model(20);
  const ObservabilityGramian g = observability_gramian(sm, 20, 1);
  EXPECT_EQ(g.dim, sm.size());
  EXPECT_LT((g.G - g.G.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.G).eigenvalues();
  EXPECT_GE(ev.minCoeff(), -1e-14 * ev.maxCoeff());
}

TEST(Gramian, WeightLimit) {
  EXPECT_EQ(gramian_weight(0.7, 0), 0.7);
  EXPECT_NEAR(gramian_weight(1, 1e-12), 1, 1e-12);
  EXPECT_NEAR(gramian_weight(1, 2), (1 - std::exp(-2.0)) / 2, 1e-16);
}

TEST(Gramian, ExtendedMinEigFrozen) {
  const SpectralModel& sm = union_model(8);
  EXPECT_NEAR(gramian_min_eig_extended(sm, 4, 1).min_eig, 5.7865768564646566e-05, 1e-12 * 5.8e-5);
  EXPECT_NEAR(gramian_min_eig_extended(sm, 8, 1).min_eig, 3.0652303013583198e-09, 1e-12 * 3.1e-9);
  EXPECT_NEAR(gramian_min_eig_extended(sm, 8, 0.5).min_eig, 6.4164629660286612e-10, 1e-12 * 6.4e-10);
}

TEST(Gramian, ExtendedAgreesWithDoubleWhenWellConditioned) {
  const SpectralModel& sm = union_model(8);
  const ObservabilityGramian g = observability_gramian(sm, 4, 1);
  const ExtendedMinEig e = gramian_min_eig_extended(sm, 4, 1);
  EXPECT_EQ(e.dim, g.dim);
  EXPECT_NEAR(e.min_eig, g.min_eig, 1e-9 * g.min_eig);
  EXPECT_NEAR(e.max_eig, g.max_eig, 1e-12 * g.max_eig);
}

TEST(Gramian, ExtendedNeedsCoordinateCircles) {
  const SpectralModel sm = make_spectral_model(ManifoldModel::sphere(), Hypersurface::single(SigmaKind::SphereEquator), 3);
  EXPECT_EQ(code_of([&] { gramian_min_eig_extended(sm, 3, 1); }), ErrorCode::UnsupportedPair);
}

TEST(Gramian, EmptyTruncation) {
  const SpectralModel& sm = union_model(4);
  EXPECT_EQ(code_of([&] { observability_gramian(sm, -1, 1); }), ErrorCode::EmptyTruncation);
}

// ---- controls ----

TEST(MinNormControl, ConstantModeIsAnnihilated) {
  const SpectralModel& sm = union_model(4);
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(sm.size());
  v0[0] = 1.5;
  for (double T : {0.3, 1.0}) {
    const ControlResult c = min_norm_control(sm, 0, v0, T);
    EXPECT_LE(std::abs(c.terminal[0]), 1e-10);
  }
}

TEST(MinNormControl, AnnihilatesTruncationAndScales) {
  const SpectralModel& sm = union_model(6);
  const double lam = 3;
  const Eigen::Index dim = sm.truncation(lam);
  Eigen::VectorXd v0 = random_state(sm, 21);
  v0.tail(sm.size() - dim).setZero();
  const ControlResult a = min_norm_control(sm, lam, v0, 1);
  const ControlResult b = min_norm_control(sm, lam, 3 * v0, 1);
  Eigen::VectorXd low = a.terminal;
  low.tail(sm.size() - dim).setZero();
  EXPECT_LE(sm.hm1_norm(low) / sm.hm1_norm(v0), 1e-10);
  EXPECT_NEAR(b.cost, 3 * a.cost, 1e-10 * b.cost);
  EXPECT_GT(a.cost, 0);
}

TEST(MinNormControl, RejectsDataOutsideTruncation) {
  const SpectralModel& sm = union_model(6);
  EXPECT_EQ(code_of([&] { min_norm_control(sm, 2, random_state(sm, 1), 1); }), ErrorCode::ConfigError);
}

TEST(MinNormControl, SingleCircleIsSingularAtWorkingPrecision) {
  const SpectralModel& sm = x0_model(8);
  const Eigen::Index dim = sm.truncation(8);
  Eigen::VectorXd v0 = random_state(sm, 2);
  v0.tail(sm.size() - dim).setZero();
  EXPECT_EQ(code_of([&] { min_norm_control(sm, 8, v0, 1); }), ErrorCode::GramianSingular);
  // The union stays invertible at the same cutoff.
  EXPECT_GT(observability_gramian(union_model(8), 8, 1).min_eig, 1e-13);
}

TEST(ApplyControl, ZeroControlDecaysMonotonically) {
  const SpectralModel& sm = union_model(6);
  const Eigen::VectorXd v0 = random_state(sm, 4);
  ControlResult none;
  none.model_id = sm.id;
  none.T = 1;
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  const Trajectory tr = apply_control(sm, v0, none, grid);
  for (std::size_t i = 1; i < tr.hm1.size(); ++i) EXPECT_LE(tr.hm1[i], tr.hm1[i - 1]);
  EXPECT_LT((tr.final_state - heat_evolve(sm, v0, 1)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ApplyControl, MatchesBruteForceQuadrature) {
  const SpectralModel& sm = union_model(6);
  const double lam = 3, T = 1;
  const Eigen::Index dim = sm.truncation(lam);
  Eigen::VectorXd v0 = random_state(sm, 8);
  v0.tail(sm.size() - dim).setZero();
  const ControlResult c = min_norm_control(sm, lam, v0, T);
  // Composite Simpson on 10^4 steps of the Duhamel integral.
  const int n = 10000;
  const double h = T / n;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(sm.size());
  Eigen::VectorXd w(sm.trace.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = sm.quad.weights[i];
  double scale = 0;
  for (int i = 0; i <= n; ++i) {
    const double s = i * h;
    const double ws = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    const ControlTraces f = control_traces(sm, c, s);
    const Eigen::VectorXd src =
        sm.trace.transpose() * w.cwiseProduct(f.f0) - sm.normal.transpose() * w.cwiseProduct(f.f1);
    for (Eigen::Index j = 0; j < sm.size(); ++j) {
      const double term = ws * std::exp(-(T - s) * sm.lambda2[j]) * src[j];
      acc[j] += term;
    }
  }
  acc *= h / 3;
  const Eigen::VectorXd brute = heat_evolve(sm, v0, T) + acc;
  for (Eigen::Index j = 0; j < sm.size(); ++j) scale = std::max(scale, std::abs(acc[j]));
  EXPECT_LE((brute - c.terminal).cwiseAbs().maxCoeff() / scale, 1e-8);
  // Modes above the cutoff are moved by the control.
  EXPECT_GT(acc.tail(sm.size() - dim).cwiseAbs().maxCoeff(), 1e-6 * scale);
}

TEST(ApplyControl, ModelMismatch) {
  const ControlResult c = min_norm_control(union_model(4), 0, Eigen::VectorXd::Unit(union_model(4).size(), 0), 1);
  const SpectralModel& other = union_model(6);
  EXPECT_EQ(code_of([&] { apply_control(other, random_state(other, 1), c, {0.5}); }), ErrorCode::ModelMismatch);
}

TEST(LrControl, ZeroStateCostsNothing) {
  const SpectralModel& sm = union_model(16);
  const LrResult r = lr_control(sm, Eigen::VectorXd::Zero(sm.size()), 1, 1, 0, Precision::Extended);
  EXPECT_EQ(r.control.cost, 0);
  EXPECT_EQ(r.control.terminal_norm, 0);
}

TEST(LrControl, ScheduleStructure) {
  const SpectralModel& sm = union_model(16);
  const LrResult r = lr_control(sm, random_state(sm, 1), 1, 1, 0, Precision::Extended);
  const auto& st = r.schedule.stages;
  ASSERT_GE(st.size(), 2u);
  EXPECT_EQ(st.front().start, 0);
  EXPECT_EQ(st.back().end, 1);
  for (std::size_t i = 0; i < st.size(); ++i) {
    EXPECT_EQ(st[i].mode, i % 2 ? StageMode::Dissipate : StageMode::Control);
    if (i + 1 < st.size()) EXPECT_EQ(st[i].end, st[i + 1].start);
    if (i >= 2 && st[i].mode == StageMode::Control) EXPECT_GT(st[i].lambda, st[i - 2].lambda);
  }
  EXPECT_EQ(st[st.size() - 2].lambda, 16);
}

TEST(LrControl, ExtendedDrivesStateToZero) {
  const SpectralModel& sm = union_model(16);
  LrSolver solver(sm, 1, 1, Precision::Extended);
  for (std::uint64_t seed : {1u, 2u}) {
    const Eigen::VectorXd v0 = random_state(sm, seed);
    const LrResult r = solver.run(v0);
    EXPECT_LE(r.control.terminal_norm, 1e-6);
    for (double a : r.control.annihilation) EXPECT_LE(a, 1e-10);
    // Independent replay of the synthesized control.
    const Trajectory tr = apply_control(sm, v0, r.control, {0.0, 0.5, 1.0});
    EXPECT_LE(sm.hm1_norm(tr.final_state - r.control.terminal), 1e-12);
  }
  EXPECT_GE(solver.digits(), 60);
}

TEST(LrControl, DoubleStageGramianSingular) {
  const SpectralModel& sm = union_model(16);
  try {
    lr_control(sm, random_state(sm, 1), 1, 1);
    FAIL() << "expected StageGramianSingular";
  } catch (const LabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::StageGramianSingular);
    EXPECT_NE(std::string(e.what()).find("stage"), std::string::npos);
  }
}

TEST(LrControl, CutoffTooSmall) {
  const SpectralModel& sm = union_model(8);
  EXPECT_EQ(code_of([&] { LrSolver(sm, 1, 1); }), ErrorCode::ConfigError);
}

// ---- properties ----

TEST(Duality, TranspositionIdentity) {
  const DualityReport r = duality_check(union_model(6), 20, 99);
  EXPECT_EQ(r.trials, 20);
  EXPECT_LE(r.max_rel_error, 1e-10);
}

TEST(Miller, ConclusionHoldsOnRandomTrials) {
  const MillerReport r = miller_check(union_model(8), LfFit{1, 1, 1}, 0.5, 1, 100, 5);
  EXPECT_EQ(r.trials, 100);
  EXPECT_EQ(r.implication_violations, 0);
  EXPECT_EQ(r.conclusion_violations, 0);
  EXPECT_GT(r.r, 0);
}

TEST(Miller, FMonotoneInT) {
  const LfFit fit{1, 1, 1};
  EXPECT_LT(miller_f(fit, 0.5, 0.5, 0.5), miller_f(fit, 0.5, 0.5, 1.0));
  EXPECT_NEAR(miller_f(fit, 0.5, 0.5, 0.999999), miller_f(fit, 0.5, 0.5, 1.0), 1e-5);
}
