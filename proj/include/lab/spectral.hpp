#pragma once

#include "lab/geometry.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lab {

using cplx = std::complex<double>;
using Grad2 = Eigen::Vector2cd;

enum class TorusFactor { Exp, Cos, Sin };

// Torus (m, n); sphere (l, m); revolution (k, branch index). tag carries the factor
// types on the torus ("exp", "cs", ...), "re"/"im"/"" on the sphere and the parity "e"/"o" on the revolution.
struct ModeLabel {
  int a = 0;
  int b = 0;
  std::string tag;
  std::string str() const;
};

struct EigenMode {
  ManifoldKind manifold = ManifoldKind::Torus2;
  double lambda = 0;
  ModeLabel label;
  std::function<cplx(const Vec2&)> value;
  // Chart partial derivatives.
  std::function<Grad2(const Vec2&)> gradient;
  // Revolution modes live on a z-grid of this step; 0 otherwise.
  double grid_step = 0;
  // Profile coefficients for revolution modes, used to detect mismatched manifolds.
  std::vector<double> profile_coeffs;

  cplx normal_derivative(const FermiChart& chart, const Vec2& x) const;
};

inline double japanese(double lambda) { return std::sqrt(1 + lambda * lambda); }

// ---- torus ----
EigenMode torus_mode(int m, int n, TorusFactor fx = TorusFactor::Exp, TorusFactor fy = TorusFactor::Exp);
// e^{i(mx+ny)}/(2pi) with m^2+n^2 <= cutoff^2, sorted by lambda then (m, n).
std::vector<EigenMode> torus_modes(double cutoff);
// Real basis of products of cos/sin, same eigenvalues and multiplicities.
std::vector<EigenMode> torus_real_modes(double cutoff);
std::size_t torus_mode_count(double cutoff);

// ---- sphere ----
// Fully normalized associated Legendre function and its phi-derivative at cos(phi).
struct LegendreValue {
  double p = 0;
  double dp_dphi = 0;
};
LegendreValue normalized_legendre(int l, int m, double phi);

EigenMode sphere_mode(int l, int m);
// Real harmonics: m > 0 cosine, m < 0 sine.
EigenMode sphere_real_mode(int l, int m);
std::vector<EigenMode> sphere_real_modes(int lmax);

struct SphereEquatorCauchy {
  double amplitude = 0;
  double scaled_ratio = 0;
};
SphereEquatorCauchy sphere_equator_cauchy(int l);
// Amplitude of d/dphi Y_l^{l-1} on the equator through the Legendre recurrence.
double sphere_equator_amplitude_recurrence(int l);

struct GammaChain {
  double reflection_residual = 0;
  double product_residual = 0;
  double ratio = 0;
};
GammaChain gamma_chain_check(int l);

// ---- surface of revolution ----
enum class RadialBc { Dirichlet, Neumann };
const char* bc_name(RadialBc bc);

struct RadialPair {
  double E = 0;
  // Values at z_i = i*dz, i = 0..grid_n, with psi[grid_n] = 0; trapezoid-normalized on (0, pi).
  std::vector<double> psi;
};

struct RadialEigenproblem {
  RevolutionProfile profile{{1.0}};
  int k = 0;
  double h = 0;
  RadialBc bc0 = RadialBc::Neumann;
  int grid_n = 0;
  double dz = 0;
  double window_lo = 0;
  double window_hi = 0;
  double margin = 0;
  std::vector<RadialPair> pairs;

  int count_in_window() const;
};

// -h^2 d^2/dz^2 + 1/R^2 + h^2 V1 on (0, pi), eigenvalues in (lo - margin, hi + margin].
RadialEigenproblem radial_eigensolve(const RevolutionProfile& profile, int k, RadialBc bc0, int grid_n = 4000,
                                     double lo = 0.2, double hi = 0.5, double margin = 0);
RadialEigenproblem radial_eigensolve_h(const RevolutionProfile& profile, double h, RadialBc bc0, int grid_n,
                                       double lo, double hi, double margin = 0);

// ||(P - E) psi|| / ||psi|| for the discrete half-interval operator.
double radial_discrete_residual(const RadialEigenproblem& prob, std::size_t index);
// Same quantity for the reflected grid function with the full-interval operator on (-pi, pi).
double radial_extended_residual(const RadialEigenproblem& prob, std::size_t index);
// Residual of the grid eigenfunction against a fourth-order stencil; tracks the discretization error.
double radial_continuum_residual(const RadialEigenproblem& prob, std::size_t index);

struct WeylResult {
  int count = 0;
  double prediction = 0;
};
WeylResult weyl_count(const RevolutionProfile& profile, double h, double lo, double hi, int grid_n = 4000,
                      RadialBc bc0 = RadialBc::Neumann);
double weyl_prediction(const RevolutionProfile& profile, double h, double lo, double hi);

// Smallest k in [kmin, kmax] such that every k' in [k, kmax] has window eigenvalues for both parities; -1 if none.
int window_onset(const RevolutionProfile& profile, int kmin, int kmax, double lo = 0.2, double hi = 0.5,
                 int grid_n = 4000);

// Mode u = R^{-1/2} psi e^{ik theta} on (-pi, pi), reflected oddly (Dirichlet) or evenly (Neumann).
// A non-empty expected parity ("e"/"o") must match bc0.
EigenMode extend_by_involution(const RadialEigenproblem& prob, std::size_t index, const std::string& parity = "");

// First positive z with V(z) = E, and the integral of sqrt(V - E) from 0 to there.
double turning_point(const RevolutionProfile& profile, double E);
double agmon_distance(const RevolutionProfile& profile, double E);

struct AgmonRow {
  int k = 0;
  double E = 0;
  double sup_near_sigma = 0;
};

struct AgmonFit {
  double c_fit = 0;
  double prediction = 0;
  double r2 = 0;
  std::vector<AgmonRow> rows;
};

AgmonFit agmon_rate_fit(const RevolutionProfile& profile, const std::vector<int>& ks, double eps, double lo = 0.2,
                        double hi = 0.5, int grid_n = 4000, RadialBc bc0 = RadialBc::Neumann);

// ---- Cauchy data and sweeps ----
struct CauchyData {
  double trace_norm = 0;
  double normal_norm = 0;
  double scaled_normal_norm = 0;
  double combined = 0;
};

struct TraceSamples {
  Eigen::VectorXcd trace;
  Eigen::VectorXcd normal;
};

void check_mode_manifold(const EigenMode& mode, const ManifoldModel& m);
TraceSamples sample_traces(const EigenMode& mode, const ManifoldModel& m, const Hypersurface& sigma,
                           const SigmaQuadrature& quad);
CauchyData cauchy_data(const EigenMode& mode, const ManifoldModel& m, const Hypersurface& sigma,
                       const SigmaQuadrature& quad);

enum class BoundKind { GenLow, Unique, UniqueControl };
const char* bound_name(BoundKind b);
BoundKind parse_bound(const std::string& s);

struct BoundSweepRow {
  double lambda = 0;
  int dim = 0;
  double min_q = 0;
  BoundKind which = BoundKind::GenLow;
};

struct BoundSweepTable {
  std::vector<BoundSweepRow> rows;
};

// genLow uses |u|^2 + |d_nu u|^2 on Sigma; unique and uniqueControl scale the normal part by <lambda>^{-1}.
BoundSweepTable lower_bound_sweep(const std::vector<EigenMode>& modes, const ManifoldModel& m,
                                  const Hypersurface& sigma, const SigmaQuadrature& quad, BoundKind which);

// Gram matrix of the modes in L^2(M) under area quadrature.
Eigen::MatrixXcd area_gram(const std::vector<EigenMode>& modes, const ManifoldModel& m, int n1 = 128, int n2 = 128);
// RMS over sample points of |(-Delta_g - lambda^2) u| relative to the RMS of |u|, by fourth-order
// differences of the exact gradient. step <= 0 picks 0.003/max(1, lambda). Torus and sphere only.
double mode_residual(const EigenMode& mode, const ManifoldModel& m, int samples = 64, double step = 0);

}  // namespace lab
