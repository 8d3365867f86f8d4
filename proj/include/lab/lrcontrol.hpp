#pragma once

#include "lab/geometry.hpp"
#include "lab/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace lab {

// ---- spectral model ----

// Real orthonormal eigenbasis truncated at `cutoff`, with Cauchy data on Sigma.
struct SpectralModel {
  ManifoldModel manifold;
  Hypersurface sigma;
  double cutoff = 0;
  std::vector<EigenMode> modes;
  Eigen::VectorXd lambda2;
  SigmaQuadrature quad;
  // Quadrature nodes x modes.
  Eigen::MatrixXd trace;
  Eigen::MatrixXd normal;
  // <u_i, u_j>_Sigma + <d_nu u_i, d_nu u_j>_Sigma
  Eigen::MatrixXd cauchy_gram;
  // Modes in different blocks have orthogonal Cauchy data; blocks[b] lists mode indices.
  std::vector<int> block_of;
  std::vector<std::vector<int>> blocks;
  std::uint64_t id = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(modes.size()); }
  // Number of modes with lambda_j <= lambda.
  Eigen::Index truncation(double lambda) const;
  // sum (1 + lambda_j^2)^s |v_j|^2, square-rooted.
  double norm(const Eigen::VectorXd& v, double s) const;
  double hm1_norm(const Eigen::VectorXd& v) const { return norm(v, -1); }
};

// Torus (real cos/sin basis) or sphere (real harmonics). nodes = 0 picks an exact trapezoid size.
SpectralModel make_spectral_model(const ManifoldModel& m, const Hypersurface& sigma, double cutoff, int nodes = 0);

// Random vector with unit H^{-1} norm.
Eigen::VectorXd random_state(const SpectralModel& sm, std::uint64_t seed, double s = -1);

Eigen::VectorXd heat_evolve(const SpectralModel& sm, const Eigen::VectorXd& v, double t);
// cosh(s sqrt(-A)) v0 + sinh(s sqrt(-A))/sqrt(-A) v1
Eigen::VectorXd elliptic_evolve(const SpectralModel& sm, const Eigen::VectorXd& v0, const Eigen::VectorXd& v1,
                                double s);

struct AdmissibilityRow {
  double lambda = 0;
  double cauchy2 = 0;
  double ratio = 0;
};
struct AdmissibilityTable {
  double T = 0;
  std::vector<AdmissibilityRow> rows;
  double max_ratio = 0;
};
AdmissibilityTable admissibility_check(const SpectralModel& sm, double T);

// ---- transmutation kernel ----

struct TransmutationKernel {
  double T = 1;
  double S = 1;
  double delta = 0.5;
  double alpha = 0;
  int n_max = 200;
  double tol = 1e-12;

  // alpha = 1.05 S^2 (1 + 1/delta) unless given.
  static TransmutationKernel make(double T, double S, double delta = 0.5, double alpha = 0);
  void validate() const;
};

// g_1^{(k)}(t) for k = 0..k_max, g_1(t) = exp(-alpha (1/t + 1/(T-t))).
std::vector<double> g1_derivatives(double T, double alpha, double t, int k_max);
// log|g_1^{(k)}(t)| (-inf for exact zeros), same recurrence without the double range limit.
std::vector<double> g1_log_abs_derivatives(double T, double alpha, double t, int k_max);

struct KernelValue {
  double value = 0;
  double tail_bound = 0;
  int terms = 0;
};
KernelValue transmutation_eval(const TransmutationKernel& k, double t, double s);

struct KernelReport {
  int grid = 0;
  double step = 0;
  double max_abs = 0;
  double residual = 0;       // relative heat residual at `step`
  double residual_half = 0;  // at step / 2
  double order = 0;          // log2(residual / residual_half)
  double symmetry = 0;       // max |k(T-t, s) - k(t, s)| / max |k|
  double odd = 0;            // max |k(t, -s) + k(t, s)| / max |k|
  double s0_max = 0;         // max |k(t, 0)|
  double ds0_error = 0;      // max |d_s k(t, 0) - g_1(t)|, two-point stencil
  double near_zero = 0;      // max |k(t_min, s)| in double
  double near_T = 0;         // max |k(T - t_min, s)| in double
  double bound_worst = 0;    // max over grid of log|k| - log bound (<= 0 when it holds)
  double deriv_bound_worst = 0;
  int deriv_k_max = 40;
};
KernelReport kernel_verify(const TransmutationKernel& k, int grid = 64, double step = 1e-3);

// ---- Gramians and controls ----

// (1 - exp(-T s)) / s, T at s = 0.
double gramian_weight(double T, double s);

struct ObservabilityGramian {
  double lambda = 0;
  double T = 0;
  Eigen::Index dim = 0;
  Eigen::MatrixXd G;
  double min_eig = 0;
  double max_eig = 0;
};
ObservabilityGramian observability_gramian(const SpectralModel& sm, double lambda, double T);

enum class Precision { Double, Extended };
const char* precision_name(Precision p);

struct ExtendedCoefficients;

struct ControlSegment {
  double start = 0;
  double end = 0;
  double lambda = 0;
  Eigen::Index dim = 0;  // controls use modes [0, dim)
  Eigen::VectorXd coeffs;
  double cost = 0;
  // Control contribution to every mode at `end` (extended results carry it rounded from the exact sum).
  Eigen::VectorXd effect;
  std::shared_ptr<const ExtendedCoefficients> extended;
};

struct ControlResult {
  std::uint64_t model_id = 0;
  double T = 0;
  Precision precision = Precision::Double;
  std::vector<ControlSegment> segments;
  double cost = 0;
  Eigen::VectorXd terminal;
  double terminal_norm = 0;
  double tolerance = 0;
  // |P_{E_lambda_k} v| / |v0| in H^{-1} right after each control segment.
  std::vector<double> annihilation;
};

ControlResult min_norm_control(const SpectralModel& sm, double lambda, const Eigen::VectorXd& v0, double T,
                               Precision p = Precision::Double);

struct Trajectory {
  std::vector<double> t;
  std::vector<double> hm1;
  Eigen::VectorXd final_state;
};
// State coefficients at time t.
Eigen::VectorXd control_state(const SpectralModel& sm, const Eigen::VectorXd& v0, const ControlResult& ctrl, double t);
Trajectory apply_control(const SpectralModel& sm, const Eigen::VectorXd& v0, const ControlResult& ctrl,
                         const std::vector<double>& t_grid);

// Sampled f0 and f1 at time t on the model's quadrature nodes.
struct ControlTraces {
  Eigen::VectorXd f0;
  Eigen::VectorXd f1;
};
ControlTraces control_traces(const SpectralModel& sm, const ControlResult& ctrl, double t);

enum class StageMode { Control, Dissipate };
struct LrStage {
  double start = 0;
  double end = 0;
  double lambda = 0;
  StageMode mode = StageMode::Control;
};
struct LrSchedule {
  double q = 0.5;
  double eps = 0.5;
  std::vector<LrStage> stages;
};

struct LrResult {
  ControlResult control;
  LrSchedule schedule;
};

// Stage Gramian factorizations are cached per (T, lambda0), so several states can share them.
class LrSolver {
 public:
  LrSolver(const SpectralModel& sm, double T, double lambda0, Precision p = Precision::Double);
  ~LrSolver();
  LrSolver(const LrSolver&) = delete;
  LrSolver& operator=(const LrSolver&) = delete;
  LrResult run(const Eigen::VectorXd& v0, double rho = 0) const;
  // Working digits of the extended factorizations actually used (0 in double).
  int digits() const;
  // Precision tier per stage after the runs so far; a neighbouring horizon can start from them.
  std::vector<int> levels() const;
  void set_level_hint(std::vector<int> levels);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LrResult lr_control(const SpectralModel& sm, const Eigen::VectorXd& v0, double T, double lambda0, double rho = 0,
                    Precision p = Precision::Double);

// Smallest Gramian eigenvalue computed blockwise from extended-precision Cholesky factors (torus only).
struct ExtendedMinEig {
  double min_eig = 0;
  double max_eig = 0;
  int digits = 0;
  Eigen::Index dim = 0;
};
ExtendedMinEig gramian_min_eig_extended(const SpectralModel& sm, double lambda, double T);

// ---- properties ----

struct DualityReport {
  int trials = 0;
  double max_rel_error = 0;
};
// <v(t), u~> against <v0, u(0)> + int_0^t <f0, u|Sigma> - <f1, d_nu u|Sigma> ds with time quadrature.
DualityReport duality_check(const SpectralModel& sm, int trials, std::uint64_t seed);

struct LfFit {
  double a0 = 0;
  double a = 0;
  double b = 0;
};
struct MillerReport {
  double q = 0.5;
  double eps = 0.5;
  double r = 0;
  LfFit fit;
  int trials = 0;
  int hypothesis_holds = 0;
  int conclusion_violations = 0;
  int implication_violations = 0;
  double worst_conclusion_margin = 0;  // min over trials of log(obs) - log(lhs)
};
// f(T) = exp(-(2/T)(a/r + b/eps)) / (2 a0^2), r the largest value with (a/r + b/eps)/q <= (1-eps)/r^2.
double miller_f(const LfFit& fit, double r, double eps, double T);
MillerReport miller_check(const SpectralModel& sm, const LfFit& fit, double q, double T_star, int trials,
                          std::uint64_t seed);

}  // namespace lab
